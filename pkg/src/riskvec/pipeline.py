"""End-to-end pipeline and the file contracts between its stages.

Stage artifacts inside the output directory::

    ingest    -> posts.jsonl, ingest.json
    vectors   -> vectors.geojson
    risk      -> rbq.csv, rbq_summary.json, group_vector.geojson
    classify  -> labels.csv, topics.json
    features  -> users.csv
    regress   -> regression.json, regression.txt

``run_pipeline`` runs them all and adds ``run_manifest.json``. Every write
goes through a staging directory and is renamed into place only when the
whole step has succeeded.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

import yaml

from . import CONFIG_SCHEMA_VERSION, __version__
from .content import ContentConfig, ContentLabel, fit_topics, label_post, load_lexicon, tokenize
from .content.topics import write_topic_dump
from .errors import (
    InsufficientDataError,
    MissingArtifactError,
    RiskvecError,
    ValidationError,
)
from .geo import GeoPoint, build_trajectory
from .ingest import (
    DEFAULT_KEYWORDS,
    PeerGraph,
    SelectionConfig,
    TimedPost,
    build_peer_graph,
    group_by_user,
    parse_posts,
    parse_timestamp,
    read_posts,
    select_users,
    write_posts,
)
from .meanvec import MeanVector, group_geojson, group_mean_vector, user_mean_vector, vectors_geojson
from .polygon import load_polygon_set
from .risk import SCHEMES, PILOT, RbqRecord, load_surface, rbq, rbq_csv, rbq_summary, read_rbq_csv, risk_at
from .stats import build_feature_table, features_csv, read_features_csv, regress_features, regression_json, \
    regression_text

log = logging.getLogger(__name__)

STAGES = ("ingest", "vectors", "risk", "classify", "features", "regress")
PRODUCES = {
    "ingest": ("posts.jsonl", "ingest.json"),
    "vectors": ("vectors.geojson",),
    "risk": ("rbq.csv", "rbq_summary.json", "group_vector.geojson"),
    "classify": ("labels.csv", "topics.json"),
    "features": ("users.csv",),
    "regress": ("regression.json", "regression.txt"),
}
PRODUCER = {name: stage for stage, names in PRODUCES.items() for name in names}


@dataclass
class PipelineConfig:
    posts: Path
    evac: Path
    flood: Path | None = None
    lexicon: Path | None = None
    official_corpus: Path | None = None
    study_area: Path | None = None
    output: Path = Path("riskvec-out")
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    min_distinct_locations: int = 2
    time_window: tuple[str, str] | None = None
    sentiment_threshold: float = 0.66
    topic_threshold: float = 0.66
    alpha: float = 0.05
    topics_k: int = 4
    strong_verbs: tuple[str, ...] = ContentConfig.strong_verbs
    event_tags: tuple[str, ...] = ContentConfig.event_tags
    risk_scheme: str = PILOT
    peer_aggregation: str = "mean"
    seed: int | None = None
    units: str = "miles-mph"

    def validate(self):
        for name in ("sentiment_threshold", "topic_threshold", "alpha"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1), got {v}")
        if self.risk_scheme not in SCHEMES:
            raise ValidationError(f"risk_scheme must be one of {SCHEMES}")
        if self.peer_aggregation not in ("mean", "pooled"):
            raise ValidationError("peer_aggregation must be 'mean' or 'pooled'")
        if self.units != "miles-mph":
            raise ValidationError("only the miles-mph unit system is supported")
        if self.seed is not None and (isinstance(self.seed, bool) or not isinstance(self.seed, int)
                                      or self.seed < 0):
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.min_distinct_locations < 1:
            raise ValidationError("min_distinct_locations must be >= 1")
        if self.topics_k < 1:
            raise ValidationError("topics_k must be >= 1")
        return self

    def require_seed(self) -> int:
        if self.seed is None:
            raise ValidationError("a seed is required for topic fitting; set 'seed' or pass --seed")
        return self.seed

    def selection(self) -> SelectionConfig:
        window = None
        if self.time_window is not None:
            try:
                window = tuple(parse_timestamp(t) for t in self.time_window)
            except ValueError as exc:
                raise ValidationError(f"bad time_window: {exc}") from None
        area = tuple(load_polygon_set(self.study_area)) if self.study_area else None
        return SelectionConfig(tuple(self.keywords), self.min_distinct_locations, area, window)

    def content(self) -> ContentConfig:
        return ContentConfig(tuple(self.strong_verbs), tuple(self.event_tags),
                             self.sentiment_threshold, self.topic_threshold)

    def fingerprint(self) -> dict:
        """Config as recorded in the manifest: output location and input paths excluded."""
        doc = asdict(self)
        for key in ("posts", "evac", "flood", "lexicon", "official_corpus", "study_area", "output"):
            doc.pop(key)
        doc["keywords"] = list(self.keywords)
        doc["strong_verbs"] = list(self.strong_verbs)
        doc["event_tags"] = list(self.event_tags)
        doc["time_window"] = list(self.time_window) if self.time_window else None
        return doc


_PATH_KEYS = ("posts", "evac", "flood", "lexicon", "official_corpus", "study_area", "output")


def load_config(path: str | Path | None, **overrides) -> PipelineConfig:
    """Read a YAML config. Relative paths resolve against the config file's folder."""
    doc: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ValidationError(f"config {path} must be a mapping")
        base = path.parent
    flat: dict = {}
    paths = doc.pop("paths", {}) or {}
    for key, value in paths.items():
        flat[key.replace("-", "_")] = value
    for key, value in (doc.pop("selection", {}) or {}).items():
        flat[key] = value
    for key, value in (doc.pop("thresholds", {}) or {}).items():
        flat[{"sentiment": "sentiment_threshold", "topic": "topic_threshold"}.get(key, key)] = value
    for key, value in (doc.pop("content", {}) or {}).items():
        flat[key] = value
    flat.update({k.replace("-", "_"): v for k, v in doc.items()})
    flat.update({k: v for k, v in overrides.items() if v is not None})

    known = {f for f in PipelineConfig.__dataclass_fields__}
    unknown = set(flat) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for key in _PATH_KEYS:
        if flat.get(key) is not None:
            p = Path(flat[key])
            flat[key] = p if p.is_absolute() else (base / p)
    for key in ("keywords", "strong_verbs", "event_tags", "time_window"):
        if flat.get(key) is not None:
            flat[key] = tuple(str(v) for v in flat[key])
    if "posts" not in flat or "evac" not in flat:
        raise ValidationError("config must name at least paths.posts and paths.evac")
    try:
        cfg = PipelineConfig(**flat)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None
    return cfg.validate()


# ---------------------------------------------------------------- helpers

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


@contextmanager
def staged_output(out_dir: Path) -> Iterator[Path]:
    """Yield a staging directory; its files are moved into ``out_dir`` only on success."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    for item in sorted(staging.iterdir()):
        target = out_dir / item.name
        if target.is_dir() and not target.is_symlink():
            shutil.rmtree(target)
        os.replace(item, target)
    staging.rmdir()


def require(out_dir: Path, *names: str) -> None:
    for name in names:
        if not (out_dir / name).exists():
            raise MissingArtifactError(f"{out_dir / name} not found; run stage '{PRODUCER[name]}' first")


def _input_file(path: Path | None, role: str) -> Path | None:
    if path is None:
        return None
    if not path.is_file():
        raise ValidationError(f"{role} file not found: {path}")
    return path


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("riskvec").joinpath("data", name)))


# ---------------------------------------------------------------- stages

@dataclass
class IngestResult:
    posts: list[TimedPost]
    issues: list
    selected: list[str]
    graph: PeerGraph
    counts: dict = field(default_factory=dict)


def run_ingest(cfg: PipelineConfig) -> IngestResult:
    posts_path = _input_file(cfg.posts, "posts")
    posts, issues = read_posts(posts_path)
    n_parsed = len(posts)
    selection = cfg.selection()
    if selection.time_window is not None:
        # out-of-window posts never reach any later stage
        start, end = selection.time_window
        posts = [p for p in posts if start <= p.timestamp <= end]
    selected = sorted(select_users(posts, selection))
    graph = build_peer_graph(posts, selected)
    counts = {
        "posts_parsed": n_parsed,
        "parse_errors": len(issues),
        "posts_outside_window": n_parsed - len(posts),
        "users_in_corpus": len({p.user_id for p in posts}),
        "selected_users": len(selected),
        "peer_edges": sum(len(v) for v in graph.edges.values()),
        "external_peers": len(graph.external),
    }
    return IngestResult(posts, issues, selected, graph, counts)


def ingest_json(res: IngestResult) -> dict:
    return {
        "selected_users": res.selected,
        "peer_graph": res.graph.to_json(),
        "parse_errors": [{"line": i.line, "message": i.message} for i in res.issues],
        "counts": res.counts,
    }


@dataclass
class VectorResult:
    vectors: dict[str, MeanVector]
    trajectories: dict
    excluded: list[dict]


def run_vectors(posts: list[TimedPost], selected: list[str]) -> VectorResult:
    by_user = group_by_user(posts)
    vectors, trajectories, excluded = {}, {}, []
    for user in sorted(selected):
        try:
            traj = build_trajectory(by_user.get(user, []), user)
        except InsufficientDataError as exc:
            excluded.append({"user": user, "reason": str(exc)})
            continue
        trajectories[user] = traj
        vectors[user] = user_mean_vector(traj)
    return VectorResult(vectors, trajectories, excluded)


def _vectors_from_geojson(doc: dict) -> tuple[list[MeanVector], dict[str, tuple[float, float]]]:
    vectors, motion = [], {}
    for feat in doc["features"]:
        props = feat["properties"]
        (olon, olat), (elon, elat) = feat["geometry"]["coordinates"]
        vectors.append(MeanVector(props["user"], props["magnitude_mph"], props["azimuth_deg"],
                                  props["n_segments"], GeoPoint(olat, olon), GeoPoint(elat, elon),
                                  props["displacement_mi"], props["duration_h"]))
        motion[props["user"]] = (props["total_distance_mi"], props["average_speed_mph"])
    return vectors, motion


def run_risk(cfg: PipelineConfig, vectors: list[MeanVector], motion: dict[str, tuple[float, float]]):
    surface = load_surface(_input_file(cfg.evac, "evac"), _input_file(cfg.flood, "flood"), cfg.risk_scheme)
    records = []
    for mv in sorted(vectors, key=lambda v: v.user_id):
        d, s = motion[mv.user_id]
        r_o, r_d = risk_at(surface, mv.origin), risk_at(surface, mv.endpoint)
        records.append(RbqRecord(mv.user_id, r_o, r_d, d, s, rbq(r_o, r_d, d, s)))
    if not records:
        raise InsufficientDataError("no user has a usable trajectory")
    group = group_mean_vector(sorted(vectors, key=lambda v: v.user_id))
    return records, rbq_summary(records), group


def run_classify(cfg: PipelineConfig, posts: list[TimedPost], authors: set[str]):
    lexicon = load_lexicon(_input_file(cfg.lexicon, "lexicon"))
    official_path = _input_file(cfg.official_corpus, "official corpus") or bundled_path("official_posts.jsonl")
    official, _ = read_posts(official_path)
    model = fit_topics([tokenize(p.text) for p in official], cfg.topics_k, cfg.require_seed())
    ccfg = cfg.content()
    labels = {}
    for p in posts:
        if p.user_id in authors:
            labels[p.post_id] = (p.user_id, label_post(p, model, lexicon, ccfg))
    return labels, model


LABEL_COLUMNS = ("post_id", "user_id", "actional", "informational", "sentiment_class",
                 "by_verb", "by_topic", "topic_score")


def labels_csv(labels: dict[str, tuple[str, ContentLabel]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LABEL_COLUMNS)
    for post_id in sorted(labels):
        user, l = labels[post_id]
        w.writerow([post_id, user, int(l.actional), int(l.informational), l.sentiment_class,
                    int(l.by_verb), int(l.by_topic), repr(l.topic_score)])
    return buf.getvalue()


def read_labels_csv(text: str) -> dict[str, list[ContentLabel]]:
    by_user: dict[str, list[ContentLabel]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        label = ContentLabel(bool(int(row["actional"])), bool(int(row["informational"])),
                             row["sentiment_class"], bool(int(row["by_verb"])), bool(int(row["by_topic"])),
                             float(row["topic_score"]))
        by_user.setdefault(row["user_id"], []).append(label)
    return by_user


def _labels_by_user(labels: dict[str, tuple[str, ContentLabel]]) -> dict[str, list[ContentLabel]]:
    by_user: dict[str, list[ContentLabel]] = {}
    for post_id in sorted(labels):
        user, label = labels[post_id]
        by_user.setdefault(user, []).append(label)
    return by_user


def _authors_to_label(selected: list[str], graph: PeerGraph) -> set[str]:
    authors = set(selected)
    for user in selected:
        authors |= graph.peers(user)
    return authors


# ---------------------------------------------------------------- stage runners (file based)

def stage_ingest(cfg: PipelineConfig) -> list[str]:
    res = run_ingest(cfg)
    with staged_output(cfg.output) as tmp:
        (tmp / "posts.jsonl").write_text(write_posts(res.posts), encoding="utf-8")
        (tmp / "ingest.json").write_text(_dumps(ingest_json(res)), encoding="utf-8")
    return list(PRODUCES["ingest"])


def _load_ingest(out: Path) -> tuple[list[TimedPost], dict]:
    require(out, "posts.jsonl", "ingest.json")
    with open(out / "posts.jsonl", encoding="utf-8") as fh:
        posts, issues = parse_posts(fh)
    if issues:
        raise ValidationError(f"{out / 'posts.jsonl'} is corrupt: line {issues[0].line}: {issues[0].message}")
    doc = json.loads((out / "ingest.json").read_text(encoding="utf-8"))
    return posts, doc


def stage_vectors(cfg: PipelineConfig) -> list[str]:
    posts, doc = _load_ingest(cfg.output)
    res = run_vectors(posts, doc["selected_users"])
    geo = vectors_geojson(list(res.vectors.values()), res.trajectories, res.excluded)
    with staged_output(cfg.output) as tmp:
        (tmp / "vectors.geojson").write_text(_dumps(geo), encoding="utf-8")
    return list(PRODUCES["vectors"])


def stage_risk(cfg: PipelineConfig) -> list[str]:
    require(cfg.output, "vectors.geojson")
    doc = json.loads((cfg.output / "vectors.geojson").read_text(encoding="utf-8"))
    vectors, motion = _vectors_from_geojson(doc)
    records, summary, group = run_risk(cfg, vectors, motion)
    with staged_output(cfg.output) as tmp:
        (tmp / "rbq.csv").write_text(rbq_csv(records), encoding="utf-8")
        (tmp / "rbq_summary.json").write_text(_dumps(summary), encoding="utf-8")
        (tmp / "group_vector.geojson").write_text(_dumps(group_geojson(group)), encoding="utf-8")
    return list(PRODUCES["risk"])


def stage_classify(cfg: PipelineConfig) -> list[str]:
    posts, doc = _load_ingest(cfg.output)
    graph = PeerGraph.from_json(doc["peer_graph"])
    labels, model = run_classify(cfg, posts, _authors_to_label(doc["selected_users"], graph))
    with staged_output(cfg.output) as tmp:
        (tmp / "labels.csv").write_text(labels_csv(labels), encoding="utf-8")
        (tmp / "topics.json").write_text(write_topic_dump(model), encoding="utf-8")
    return list(PRODUCES["classify"])


def stage_features(cfg: PipelineConfig) -> list[str]:
    require(cfg.output, "ingest.json", "rbq.csv", "labels.csv")
    doc = json.loads((cfg.output / "ingest.json").read_text(encoding="utf-8"))
    records = {r.user_id: r for r in read_rbq_csv((cfg.output / "rbq.csv").read_text(encoding="utf-8"))}
    labels = read_labels_csv((cfg.output / "labels.csv").read_text(encoding="utf-8"))
    rows, _ = build_feature_table(sorted(records), records, labels, PeerGraph.from_json(doc["peer_graph"]),
                                  pool_peers=cfg.peer_aggregation == "pooled")
    with staged_output(cfg.output) as tmp:
        (tmp / "users.csv").write_text(features_csv(rows), encoding="utf-8")
    return list(PRODUCES["features"])


def stage_regress(cfg: PipelineConfig) -> list[str]:
    require(cfg.output, "users.csv")
    rows = read_features_csv((cfg.output / "users.csv").read_text(encoding="utf-8"))
    report = regress_features(rows, cfg.alpha)
    with staged_output(cfg.output) as tmp:
        (tmp / "regression.json").write_text(regression_json(report), encoding="utf-8")
        (tmp / "regression.txt").write_text(regression_text(report), encoding="utf-8")
    return list(PRODUCES["regress"])


STAGE_RUNNERS = {
    "ingest": stage_ingest,
    "vectors": stage_vectors,
    "risk": stage_risk,
    "classify": stage_classify,
    "features": stage_features,
    "regress": stage_regress,
}


# ---------------------------------------------------------------- whole run

def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage and write the bundle atomically; returns the manifest."""
    cfg.validate()
    cfg.require_seed()
    out = cfg.output
    try:
        with staged_output(out) as tmp:
            manifest = _run_into(cfg, tmp)
    except Exception as exc:
        _write_error_report(out, exc)
        raise
    stale = out / "error_report.json"
    if stale.exists():
        stale.unlink()
    return manifest


def _write_error_report(out: Path, exc: BaseException) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "error_report.json").write_text(
        _dumps({"error": type(exc).__name__, "message": str(exc)}), encoding="utf-8")


def _run_into(cfg: PipelineConfig, tmp: Path) -> dict:
    ing = run_ingest(cfg)
    if not ing.selected:
        raise InsufficientDataError("no users selected")
    vec = run_vectors(ing.posts, ing.selected)
    motion = {u: (t.total_distance, t.average_speed) for u, t in vec.trajectories.items()}
    records, summary, group = run_risk(cfg, list(vec.vectors.values()), motion)
    labels, model = run_classify(cfg, ing.posts, _authors_to_label(ing.selected, ing.graph))
    by_user = _labels_by_user(labels)
    rbq_by_user = {r.user_id: r for r in records}
    rows, feat_excluded = build_feature_table(sorted(rbq_by_user), rbq_by_user, by_user, ing.graph,
                                              pool_peers=cfg.peer_aggregation == "pooled")
    report = regress_features(rows, cfg.alpha)

    files = {
        "posts.jsonl": write_posts(ing.posts),
        "ingest.json": _dumps(ingest_json(ing)),
        "vectors.geojson": _dumps(vectors_geojson(list(vec.vectors.values()), vec.trajectories, vec.excluded)),
        "rbq.csv": rbq_csv(records),
        "rbq_summary.json": _dumps(summary),
        "group_vector.geojson": _dumps(group_geojson(group)),
        "labels.csv": labels_csv(labels),
        "topics.json": write_topic_dump(model),
        "users.csv": features_csv(rows),
        "regression.json": regression_json(report),
        "regression.txt": regression_text(report),
    }
    for name, text in files.items():
        (tmp / name).write_text(text, encoding="utf-8")

    inputs = {}
    for role in ("posts", "evac", "flood", "lexicon", "official_corpus", "study_area"):
        path = getattr(cfg, role)
        if path is not None:
            inputs[role] = _sha256(path)
    fingerprint = cfg.fingerprint()
    manifest = {
        "riskvec_version": __version__,
        "config_schema": CONFIG_SCHEMA_VERSION,
        "config": fingerprint,
        "config_sha256": hashlib.sha256(json.dumps(fingerprint, sort_keys=True).encode()).hexdigest(),
        "seed": cfg.seed,
        "inputs_sha256": inputs,
        "counts": {
            **ing.counts,
            "insufficient_trajectory": len(vec.excluded),
            "rbq_users": len(records),
            "feature_rows": len(rows),
            "feature_excluded": len(feat_excluded),
            "labelled_posts": len(labels),
            "vector_features": len(vec.vectors),
        },
        "excluded_users": vec.excluded + feat_excluded,
        "files": {name: hashlib.sha256(text.encode("utf-8")).hexdigest() for name, text in sorted(files.items())},
    }
    (tmp / "run_manifest.json").write_text(_dumps(manifest), encoding="utf-8")
    return manifest
