"""Per-user feature table and the RBQ regression."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import astuple, dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .content.labels import ContentLabel, user_content_ratios
from .errors import CollinearityError, InsufficientDataError, ValidationError
from .ingest import PeerGraph
from .risk import RbqRecord


@dataclass(frozen=True)
class UserFeatures:
    user_id: str
    rbq: float
    n_self_tweets: int
    prop_self_informational: float
    prop_self_actional: float
    prop_self_emotional: float
    n_peers: int
    n_peer_tweets: int
    prop_peer_informational: float
    prop_peer_actional: float
    prop_peer_emotional: float
    peers_missing: bool = False


FEATURE_COLUMNS = tuple(f.name for f in fields(UserFeatures))
PREDICTORS = FEATURE_COLUMNS[2:-1]


def build_feature_table(
    users: Sequence[str],
    rbq_records: Mapping[str, RbqRecord],
    labels: Mapping[str, Sequence[ContentLabel]],
    peer_graph: PeerGraph,
    pool_peers: bool = False,
) -> tuple[list[UserFeatures], list[dict]]:
    """One feature row per user that has an RBQ.

    ``labels`` maps every author (selected users and their peers) to the
    labels of all their posts. Peer aggregates only see peers who posted.
    With ``pool_peers`` the peer shares come from pooling all peer posts
    instead of averaging each peer's own shares.

    Returns the rows, sorted by user, and a list of exclusion entries.
    """
    rows, excluded = [], []
    for user in sorted(users):
        record = rbq_records.get(user)
        if record is None:
            excluded.append({"user": user, "reason": "no RBQ record"})
            continue
        own = labels.get(user, ())
        if not own:
            excluded.append({"user": user, "reason": "no posts"})
            continue
        self_info, self_act, self_emo = user_content_ratios(own)
        peers = sorted(peer_graph.peers(user))
        active = [p for p in peers if labels.get(p)]
        n_peer_tweets = sum(len(labels[p]) for p in active)
        if not active:
            peer_shares = (0.0, 0.0, 0.0)
        elif pool_peers:
            peer_shares = user_content_ratios([l for p in active for l in labels[p]])
        else:
            per_peer = [user_content_ratios(labels[p]) for p in active]
            peer_shares = tuple(math.fsum(col) / len(per_peer) for col in zip(*per_peer))
        rows.append(UserFeatures(
            user, record.rbq, len(own), self_info, self_act, self_emo,
            len(peers), n_peer_tweets, *peer_shares, peers_missing=not active,
        ))
    return rows, excluded


def features_csv(rows: Sequence[UserFeatures]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FEATURE_COLUMNS)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else int(v) if isinstance(v, bool) else v
                    for v in astuple(row)])
    return buf.getvalue()


def read_features_csv(text: str) -> list[UserFeatures]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append(UserFeatures(
            row["user_id"], float(row["rbq"]), int(row["n_self_tweets"]),
            float(row["prop_self_informational"]), float(row["prop_self_actional"]),
            float(row["prop_self_emotional"]), int(row["n_peers"]), int(row["n_peer_tweets"]),
            float(row["prop_peer_informational"]), float(row["prop_peer_actional"]),
            float(row["prop_peer_emotional"]), bool(int(row["peers_missing"])),
        ))
    return out


@dataclass
class RegressionModel:
    names: list[str]
    coefficients: list[float]  # slopes, aligned with names
    intercept: float
    std_errors: list[float]
    betas: list[float]
    t_values: list[float]
    p_values: list[float]
    intercept_p: float
    r_squared: float
    adj_r_squared: float
    n: int
    df_resid: int
    trace: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        # JSON has no infinities; exact fits give infinite t values
        def num(x):
            return x if math.isfinite(x) else None

        return {
            "n": self.n,
            "df_resid": self.df_resid,
            "r_squared": self.r_squared,
            "adj_r_squared": self.adj_r_squared,
            "intercept": {"coefficient": self.intercept, "p": self.intercept_p},
            "predictors": [
                {"name": n, "coefficient": b, "std_error": se, "beta": beta, "t": num(t), "p": p}
                for n, b, se, beta, t, p in zip(self.names, self.coefficients, self.std_errors,
                                                self.betas, self.t_values, self.p_values)
            ],
            "selection_trace": self.trace,
        }


def _p_two_sided(t: np.ndarray, coef: np.ndarray, se: np.ndarray, df: int) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = 2.0 * sps.t.sf(np.abs(t), df)
    # zero standard error: exact fit; a nonzero coefficient is infinitely significant
    degenerate = se == 0
    p[degenerate] = np.where(coef[degenerate] != 0, 0.0, 1.0)
    return p


def ols_fit(y, X, names: Sequence[str], rank_tol: float = 1e-10) -> RegressionModel:
    """Least squares with an internal intercept, solved by QR.

    Standardized betas use sample standard deviations (ddof=1). P-values
    are two-sided from the t distribution with n - p - 1 degrees of freedom.

    Raises:
        CollinearityError: a column is (numerically) a linear combination
            of the intercept and the columns before it.
        InsufficientDataError: not more rows than parameters.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    names = list(names)
    n, p = X.shape
    if len(names) != p:
        raise ValidationError(f"{len(names)} names for {p} columns")
    if n <= p + 1:
        raise InsufficientDataError(f"need more than {p + 1} rows for {p} predictors, got {n}")

    design = np.column_stack([np.ones(n), X])
    # scale columns so the rank test is unit-free
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    q, r = np.linalg.qr(design / scale)
    diag = np.abs(np.diag(r))
    dependent = [names[j - 1] for j in range(1, p + 1) if diag[j] < rank_tol * max(diag.max(), 1.0)]
    if dependent:
        raise CollinearityError(f"collinear design columns: {', '.join(dependent)}", dependent)

    coef = np.linalg.solve(r, q.T @ y) / scale
    resid = y - design @ coef
    df = n - p - 1
    sse = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    sigma2 = sse / df
    r_inv = np.linalg.solve(r, np.eye(p + 1))
    cov = sigma2 * (r_inv @ r_inv.T) / np.outer(scale, scale)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / np.where(se > 0, se, 1.0), np.inf * np.sign(coef))
    pvals = _p_two_sided(t, coef, se, df)

    r2 = 0.0 if sst == 0 else max(0.0, min(1.0, 1.0 - sse / sst))
    adj = 1.0 - (1.0 - r2) * (n - 1) / df if sst > 0 else 0.0
    sd_y = float(y.std(ddof=1))
    sd_x = X.std(axis=0, ddof=1) if p else np.zeros(0)
    betas = coef[1:] * sd_x / sd_y if sd_y > 0 else np.zeros(p)

    return RegressionModel(
        names=names,
        coefficients=[float(c) for c in coef[1:]],
        intercept=float(coef[0]),
        std_errors=[float(s) for s in se[1:]],
        betas=[float(b) for b in betas],
        t_values=[float(v) for v in t[1:]],
        p_values=[float(v) for v in pvals[1:]],
        intercept_p=float(pvals[0]),
        r_squared=r2,
        adj_r_squared=adj,
        n=n,
        df_resid=df,
    )


def backward_select(y, X, names: Sequence[str], alpha: float = 0.05) -> RegressionModel:
    """Drop the least significant predictor until every survivor has p < alpha."""
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    keep = list(range(X.shape[1]))
    names = list(names)
    trace = []
    while True:
        model = ols_fit(y, X[:, keep], [names[i] for i in keep])
        if not keep:
            break
        worst = int(np.argmax(model.p_values))
        if model.p_values[worst] < alpha:
            break
        trace.append({"step": len(trace) + 1, "dropped": model.names[worst], "p": model.p_values[worst]})
        del keep[worst]
    model.trace = trace
    return model


def regression_design(rows: Sequence[UserFeatures], predictors: Sequence[str] = PREDICTORS):
    y = np.array([r.rbq for r in rows], dtype=float)
    X = np.array([[float(getattr(r, name)) for name in predictors] for r in rows], dtype=float)
    return y, X.reshape(len(rows), len(predictors))


def screen_predictors(X: np.ndarray, names: Sequence[str]) -> tuple[list[int], list[dict]]:
    """Columns usable in a fit: drops constants, then any column dependent on earlier ones."""
    keep, dropped = [], []
    for j, name in enumerate(names):
        col = X[:, j]
        if np.ptp(col) == 0:
            dropped.append({"name": name, "reason": "constant"})
            continue
        trial = np.column_stack([np.ones(len(col)), X[:, keep + [j]]])
        trial = trial / np.linalg.norm(trial, axis=0)
        r = np.linalg.qr(trial, mode="r")
        if abs(r[-1, -1]) < 1e-10:
            dropped.append({"name": name, "reason": "collinear"})
            continue
        keep.append(j)
    return keep, dropped


def regress_features(rows: Sequence[UserFeatures], alpha: float = 0.05,
                     predictors: Sequence[str] = PREDICTORS) -> dict:
    """Full model plus backward-eliminated model, as one JSON-ready report."""
    if len(rows) < 2:
        raise InsufficientDataError(f"regression needs at least 2 users, got {len(rows)}")
    y, X = regression_design(rows, predictors)
    keep, screened = screen_predictors(X, predictors)
    while keep and len(rows) <= len(keep) + 1:
        screened.append({"name": predictors[keep[-1]], "reason": "too few rows"})
        keep.pop()
    names = [predictors[j] for j in keep]
    full = ols_fit(y, X[:, keep], names)
    final = backward_select(y, X[:, keep], names, alpha)
    return {"alpha": alpha, "screened_out": screened, "full_model": full.to_json(),
            "selected_model": final.to_json()}


def regression_text(report: dict) -> str:
    def block(title, m):
        lines = [title, f"  n = {m['n']}   R^2 = {m['r_squared']:.4f}   adj R^2 = {m['adj_r_squared']:.4f}",
                 f"  {'variable':<26}{'B':>12}{'beta':>9}{'p':>9}",
                 f"  {'(intercept)':<26}{m['intercept']['coefficient']:>12.4g}{'':>9}{m['intercept']['p']:>9.4f}"]
        for row in m["predictors"]:
            lines.append(f"  {row['name']:<26}{row['coefficient']:>12.4g}{row['beta']:>9.3f}{row['p']:>9.4f}")
        return lines

    out = ["Associations between RBQ and content features (OLS; associational, not causal)", ""]
    if report["screened_out"]:
        out.append("screened out: " + ", ".join(f"{d['name']} ({d['reason']})" for d in report["screened_out"]))
        out.append("")
    out += block("Full model", report["full_model"])
    out.append("")
    out += block(f"Backward elimination (alpha = {report['alpha']})", report["selected_model"])
    trace = report["selected_model"]["selection_trace"]
    if trace:
        out.append("  dropped in order: " + ", ".join(f"{t['dropped']} (p={t['p']:.3f})" for t in trace))
    return "\n".join(out) + "\n"


def regression_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
