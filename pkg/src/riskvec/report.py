"""Figures and a per-user summary table rendered from a finished run.

Nothing here draws maps: movement is shown as compass roses and
histograms, and the GeoJSON files stay the spatial handoff.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pipeline import require, staged_output  # noqa: E402
from .risk import read_rbq_csv  # noqa: E402

REPORT_DIR = "figures"
SUMMARY_COLUMNS = ("user_id", "r_origin", "r_dest", "level_change", "distance_mi", "speed_mph", "rbq",
                   "magnitude_mph", "azimuth_deg", "displacement_mi")

STYLE = {
    "figure.figsize": (5.5, 4.0),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
# no software/version stamp, so reruns give identical bytes
_PNG_META = {"Software": None}


def _load(out_dir: Path):
    require(out_dir, "rbq.csv", "vectors.geojson")
    records = read_rbq_csv((out_dir / "rbq.csv").read_text(encoding="utf-8"))
    doc = json.loads((out_dir / "vectors.geojson").read_text(encoding="utf-8"))
    vectors = {f["properties"]["user"]: f["properties"] for f in doc["features"]}
    regression = None
    if (out_dir / "regression.json").exists():
        regression = json.loads((out_dir / "regression.json").read_text(encoding="utf-8"))
    return records, vectors, regression


def summary_csv(records, vectors: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in sorted(records, key=lambda r: r.user_id):
        v = vectors.get(r.user_id, {})
        azimuth = v.get("azimuth_deg")
        w.writerow([r.user_id, r.r_origin, r.r_dest, r.r_dest - r.r_origin, repr(r.distance), repr(r.speed),
                    repr(r.rbq), repr(v.get("magnitude_mph", math.nan)),
                    "" if azimuth is None else repr(azimuth), repr(v.get("displacement_mi", math.nan))])
    return buf.getvalue()


def _rbq_histogram(records, path: Path):
    values = np.array([r.rbq for r in records])
    fig, ax = plt.subplots()
    # RBQ spans orders of magnitude either side of zero
    scaled = np.sign(values) * np.log10(1.0 + np.abs(values))
    ax.hist(scaled, bins=max(5, min(40, len(values))), color="0.35", edgecolor="white")
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("sign(RBQ) * log10(1 + |RBQ|)")
    ax.set_ylabel("users")
    ax.set_title(f"RBQ distribution (n = {len(values)})")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def _vector_rose(records, vectors: dict, path: Path):
    fig = plt.figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot(projection="polar")
    ax.set_theta_zero_location("N")
    ax.set_theta_direction(-1)
    by_sign = {-1: ("tab:blue", "RBQ < 0"), 0: ("0.5", "RBQ = 0"), 1: ("tab:red", "RBQ > 0")}
    for sign, (color, label) in by_sign.items():
        pts = [(math.radians(vectors[r.user_id]["azimuth_deg"]), vectors[r.user_id]["magnitude_mph"])
               for r in records
               if r.user_id in vectors and vectors[r.user_id]["azimuth_deg"] is not None
               and int(np.sign(r.rbq)) == sign]
        if pts:
            theta, rho = zip(*pts)
            ax.scatter(theta, rho, s=14, color=color, label=label, alpha=0.8)
    ax.set_title("Mean movement vectors (azimuth, mph)")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="lower left", bbox_to_anchor=(-0.15, -0.15), fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def _transition_matrix(records, path: Path):
    top = max([4] + [max(r.r_origin, r.r_dest) for r in records])
    counts = np.zeros((top + 1, top + 1), dtype=int)
    for r in records:
        counts[r.r_origin, r.r_dest] += 1
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    ax.imshow(counts, cmap="Greys", origin="lower")
    for i in range(top + 1):
        for j in range(top + 1):
            if counts[i, j]:
                ax.text(j, i, str(counts[i, j]), ha="center", va="center",
                        color="white" if counts[i, j] > counts.max() / 2 else "black", fontsize=8)
    ax.set_xlabel("destination risk level")
    ax.set_ylabel("origin risk level")
    ax.set_xticks(range(top + 1))
    ax.set_yticks(range(top + 1))
    ax.set_title("Risk level transitions")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def _beta_chart(regression: dict, path: Path):
    model = regression["full_model"]
    selected = {p["name"] for p in regression["selected_model"]["predictors"]}
    names = [p["name"] for p in model["predictors"]]
    betas = [p["beta"] for p in model["predictors"]]
    fig, ax = plt.subplots()
    if names:
        colors = ["0.2" if n in selected else "0.7" for n in names]
        ax.barh(range(len(names)), betas, color=colors)
        ax.set_yticks(range(len(names)))
        ax.set_yticklabels(names)
        ax.invert_yaxis()
    else:
        ax.text(0.5, 0.5, "no predictors fitted", ha="center", va="center", transform=ax.transAxes)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("standardized beta (dark: retained after elimination)")
    ax.set_title(f"Associations with RBQ (n = {model['n']}, R^2 = {model['r_squared']:.3f})")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def render_report(out_dir: str | Path) -> list[str]:
    """Write ``figures/`` inside a run directory; returns the file names written."""
    out_dir = Path(out_dir)
    records, vectors, regression = _load(out_dir)
    written = ["user_summary.csv", "rbq_histogram.png", "vector_rose.png", "level_transitions.png"]
    with plt.rc_context(STYLE), staged_output(out_dir) as tmp:
        fig_dir = tmp / REPORT_DIR
        fig_dir.mkdir()
        (fig_dir / "user_summary.csv").write_text(summary_csv(records, vectors), encoding="utf-8")
        _rbq_histogram(records, fig_dir / "rbq_histogram.png")
        _vector_rose(records, vectors, fig_dir / "vector_rose.png")
        _transition_matrix(records, fig_dir / "level_transitions.png")
        if regression is not None:
            _beta_chart(regression, fig_dir / "regression_betas.png")
            written.append("regression_betas.png")
    return [f"{REPORT_DIR}/{name}" for name in written]
