import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import normal_equations_ols
from riskvec.content import NEGATIVE, NEUTRAL, ContentLabel
from riskvec.errors import CollinearityError, InsufficientDataError
from riskvec.ingest import PeerGraph
from riskvec.risk import RbqRecord
from riskvec.stats import (
    PREDICTORS,
    backward_select,
    build_feature_table,
    features_csv,
    ols_fit,
    read_features_csv,
    regress_features,
    regression_json,
    regression_text,
)


def design(seed, n=60, p=3):
    rng = np.random.Generator(np.random.Philox(seed))
    return rng, rng.normal(size=(n, p))


class TestOls:
    def test_noiseless_recovery(self):
        _, X = design(1)
        y = 2.5 + X @ np.array([1.5, -0.75, 0.0])
        m = ols_fit(y, X, ["a", "b", "c"])
        np.testing.assert_allclose(m.coefficients, [1.5, -0.75, 0.0], atol=1e-9)
        assert m.intercept == pytest.approx(2.5, abs=1e-9)
        assert m.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_constant_response(self):
        _, X = design(2)
        m = ols_fit(np.full(60, 3.0), X, ["a", "b", "c"])
        np.testing.assert_allclose(m.coefficients, 0.0, atol=1e-12)
        assert m.r_squared == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_normal_equations(self, seed):
        rng, X = design(seed, n=80, p=4)
        y = X @ rng.normal(size=4) + rng.normal(size=80)
        m = ols_fit(y, X, list("abcd"))
        coef, se, pvals, r2 = normal_equations_ols(y, X)
        np.testing.assert_allclose([m.intercept, *m.coefficients], coef, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(m.std_errors, se[1:], rtol=1e-8)
        np.testing.assert_allclose(m.p_values, pvals[1:], rtol=1e-6, atol=1e-14)
        assert m.r_squared == pytest.approx(r2, abs=1e-12)

    def test_standardized_betas(self):
        rng, X = design(3, n=100, p=2)
        y = X @ np.array([1.0, 2.0]) + rng.normal(size=100)
        m = ols_fit(y, X, ["a", "b"])
        sd = X.std(axis=0, ddof=1) / y.std(ddof=1)
        np.testing.assert_allclose(m.betas, np.array(m.coefficients) * sd)

    def test_collinear_columns_named(self):
        _, X = design(4, p=2)
        X = np.column_stack([X, X[:, 0] - 2 * X[:, 1]])
        with pytest.raises(CollinearityError) as err:
            ols_fit(X @ [1, 1, 1], X, ["a", "b", "c"])
        assert err.value.columns == ["c"] and "c" in str(err.value)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            ols_fit([1.0, 2.0, 3.0], [[1, 2], [2, 1], [3, 3]], ["a", "b"])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_residuals_orthogonal_to_design(self, seed):
        rng, X = design(seed, n=40, p=3)
        y = rng.normal(size=40) * 10
        m = ols_fit(y, X, list("abc"))
        resid = y - m.intercept - X @ np.array(m.coefficients)
        A = np.column_stack([np.ones(40), X])
        assert np.all(np.abs(A.T @ resid) < 1e-8 * (1 + np.abs(y).sum()))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([1e-3, 1000.0]))
    def test_betas_unit_free(self, seed, factor):
        rng, X = design(seed, n=40, p=3)
        y = X @ rng.normal(size=3) + rng.normal(size=40)
        a = ols_fit(y, X, list("abc"))
        Xs = X.copy()
        Xs[:, 1] *= factor
        b = ols_fit(y, Xs, list("abc"))
        np.testing.assert_allclose(a.betas, b.betas, rtol=1e-7, atol=1e-12)
        np.testing.assert_allclose(a.p_values, b.p_values, rtol=1e-6, atol=1e-14)


class TestBackward:
    def test_strong_predictor_kept(self):
        kept = 0
        for seed in range(100):
            rng, X = design(seed, n=200, p=9)
            y = 0.5 * X[:, 0] + rng.normal(size=200)
            kept += "x0" in backward_select(y, X, [f"x{i}" for i in range(9)]).names
        assert kept == 100

    def test_noise_design_usually_empty(self):
        empty = 0
        for seed in range(100):
            rng, X = design(seed, n=200, p=9)
            empty += backward_select(rng.normal(size=200), X, [f"x{i}" for i in range(9)]).names == []
        assert empty > 50

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_survivors_significant_subset(self, seed):
        rng, X = design(seed, n=80, p=5)
        names = list("abcde")
        y = X @ (rng.normal(size=5) * 0.3) + rng.normal(size=80)
        m = backward_select(y, X, names)
        assert set(m.names) <= set(names)
        assert all(p < 0.05 for p in m.p_values)
        assert len(m.trace) == 5 - len(m.names)


# ---------------------------------------------------------------- feature table

def lab(actional=False, informational=False, sentiment=NEUTRAL):
    return ContentLabel(actional, informational, sentiment)


def rbq_rec(user, value):
    return RbqRecord(user, 2, 2, 1.0, 1.0, value)


class TestFeatures:
    def test_zero_peers_flagged(self):
        rows, excluded = build_feature_table(["u"], {"u": rbq_rec("u", 4.0)}, {"u": [lab(True)]}, PeerGraph({}))
        (row,) = rows
        assert row.peers_missing and row.n_peers == 0
        assert (row.prop_peer_informational, row.prop_peer_actional, row.prop_peer_emotional) == (0, 0, 0)
        assert excluded == []

    def test_peer_mean_of_shares(self):
        labels = {
            "u": [lab()],
            "a": [lab(True)] + [lab()] * 4,   # 0.2 actional
            "b": [lab(True)] * 2 + [lab()] * 3,  # 0.4 actional
        }
        graph = PeerGraph({"u": {"a", "b"}})
        (row,), _ = build_feature_table(["u"], {"u": rbq_rec("u", 1.0)}, labels, graph)
        assert row.prop_peer_actional == pytest.approx(0.3)
        assert row.n_peers == 2 and row.n_peer_tweets == 10 and not row.peers_missing

    def test_pooled_peers(self):
        labels = {"u": [lab()], "a": [lab(True)], "b": [lab()] * 3}
        (row,), _ = build_feature_table(["u"], {"u": rbq_rec("u", 1.0)}, labels, PeerGraph({"u": {"a", "b"}}),
                                        pool_peers=True)
        assert row.prop_peer_actional == pytest.approx(0.25)

    def test_silent_peer_counted_but_not_averaged(self):
        labels = {"u": [lab()], "a": [lab(sentiment=NEGATIVE)]}
        (row,), _ = build_feature_table(["u"], {"u": rbq_rec("u", 1.0)}, labels, PeerGraph({"u": {"a", "ghost"}}))
        assert row.n_peers == 2 and row.prop_peer_emotional == 1.0

    def test_exclusions(self):
        rows, excluded = build_feature_table(["u", "v", "w"], {"u": rbq_rec("u", 1.0), "v": rbq_rec("v", 2.0)},
                                             {"u": [lab()]}, PeerGraph({}))
        assert [r.user_id for r in rows] == ["u"]
        assert {e["user"]: e["reason"] for e in excluded} == {"v": "no posts", "w": "no RBQ record"}

    @given(st.dictionaries(st.sampled_from("abcdefgh"),
                           st.lists(st.tuples(st.booleans(), st.booleans(), st.sampled_from([NEGATIVE, NEUTRAL])),
                                    min_size=1, max_size=5),
                           min_size=1))
    def test_conservation_and_round_trip(self, posts):
        labels = {u: [lab(*t) for t in ts] for u, ts in posts.items()}
        users = sorted(labels)
        graph = PeerGraph({u: {v for v in users if v != u} for u in users[:2]})
        rows, excluded = build_feature_table(users, {u: rbq_rec(u, float(i)) for i, u in enumerate(users)},
                                             labels, graph)
        assert len(rows) + len(excluded) == len(users)
        assert sum(r.n_self_tweets for r in rows) == sum(len(v) for v in labels.values())
        for r in rows:
            assert all(0.0 <= v <= 1.0 for v in (r.prop_self_actional, r.prop_peer_actional))
        assert read_features_csv(features_csv(rows)) == rows


class TestRegressFeatures:
    def test_fewer_than_two_users(self):
        (row,), _ = build_feature_table(["u"], {"u": rbq_rec("u", 1.0)}, {"u": [lab()]}, PeerGraph({}))
        with pytest.raises(InsufficientDataError, match="at least 2"):
            regress_features([row])

    def test_constant_columns_screened(self):
        rng = np.random.Generator(np.random.Philox(5))
        users = [f"u{i}" for i in range(30)]
        labels = {u: [lab(bool(rng.integers(2)), False, NEUTRAL) for _ in range(int(rng.integers(1, 5)))]
                  for u in users}
        rows, _ = build_feature_table(users, {u: rbq_rec(u, float(rng.normal())) for u in users}, labels,
                                      PeerGraph({}))
        report = regress_features(rows)
        screened = {d["name"] for d in report["screened_out"]}
        assert {"prop_self_informational", "prop_self_emotional", "n_peers"} <= screened
        assert set(report["full_model"]["predictors"][i]["name"]
                   for i in range(len(report["full_model"]["predictors"]))) <= set(PREDICTORS)
        assert "Backward elimination" in regression_text(report)
        regression_json(report)
