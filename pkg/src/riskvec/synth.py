"""Seeded synthetic scenarios with known answers.

Users move in a local planar frame (miles east/north of a centre point)
over a surface of concentric square risk rings. The generator records,
for every user, the movement policy it followed and the mean vector,
risk levels and RBQ sign implied by its own planar construction. Those
truths never touch the geodesic or polygon code, so comparing them with
pipeline output is an end-to-end check.

Randomness: user ``i`` draws from a Philox stream keyed by ``(seed, i)``,
so users can be generated in any order with identical results.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import yaml

from .errors import ValidationError
from .geo import EARTH_RADIUS_MI

POLICIES = ("flee", "seek", "stationary", "random-walk")
MILES_PER_DEG_LAT = EARTH_RADIUS_MI * math.pi / 180.0


@dataclass(frozen=True)
class ScenarioSpec:
    n_users: int = 50
    policy_mix: dict = field(default_factory=lambda: {"flee": 0.35, "seek": 0.35, "stationary": 0.1,
                                                      "random-walk": 0.2})
    center: tuple[float, float] = (40.70, -73.95)
    # half-widths, in miles, of the level-3, level-2 and level-1 squares
    ring_half_widths: tuple[float, ...] = (2.0, 4.0, 6.0)
    # (x0, y0, x1, y1) miles from the centre; None disables the flood overlay
    flood_box: tuple[float, float, float, float] | None = None
    legs: tuple[int, int] = (3, 6)
    speed_mph: tuple[float, float] = (6.0, 30.0)
    leg_minutes: tuple[float, float] = (8.0, 30.0)
    p_verb: float = 0.3
    p_event_hashtag: float = 0.25
    p_emotional: float = 0.15
    p_mention: float = 0.3
    p_ungeocoded: float = 0.2
    boundary_margin_mi: float = 0.25
    start: str = "2012-10-28T14:30:00Z"

    def validate(self):
        if self.n_users < 1:
            raise ValidationError("n_users must be >= 1")
        unknown = set(self.policy_mix) - set(POLICIES)
        if unknown:
            raise ValidationError(f"unknown policies {sorted(unknown)}; expected {POLICIES}")
        if any(w < 0 for w in self.policy_mix.values()) or sum(self.policy_mix.values()) <= 0:
            raise ValidationError("policy_mix weights must be non-negative with a positive sum")
        widths = list(self.ring_half_widths)
        if any(w <= 0 for w in widths) or widths != sorted(set(widths)):
            raise ValidationError("ring_half_widths must be positive and strictly increasing")
        if len(widths) > 3:
            raise ValidationError("at most three rings (levels 3, 2, 1)")
        wants_rings = {p for p in ("flee", "seek") if self.policy_mix.get(p, 0) > 0}
        if wants_rings and not widths:
            raise ValidationError(f"policies {sorted(wants_rings)} need at least one risk ring")
        for name in ("p_verb", "p_event_hashtag", "p_emotional", "p_mention", "p_ungeocoded"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must be a probability")
        if self.legs[0] < 1 or self.legs[0] > self.legs[1]:
            raise ValidationError("legs must be an increasing range starting at >= 1")
        if not 0 < self.speed_mph[0] <= self.speed_mph[1]:
            raise ValidationError("speed_mph must be a positive increasing range")
        if not 0 < self.leg_minutes[0] <= self.leg_minutes[1]:
            raise ValidationError("leg_minutes must be a positive increasing range")

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        doc = dict(doc or {})
        for key in ("center", "ring_half_widths", "flood_box", "legs", "speed_mph", "leg_minutes"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        try:
            spec = cls(**doc)
        except TypeError as exc:
            raise ValidationError(f"bad scenario parameters: {exc}") from None
        spec.validate()
        return spec


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


class _Frame:
    """Equirectangular map between local miles and lon/lat."""

    def __init__(self, lat0: float, lon0: float):
        self.lat0, self.lon0 = lat0, lon0
        self.mi_per_deg_lon = MILES_PER_DEG_LAT * math.cos(math.radians(lat0))

    def to_lonlat(self, x: float, y: float) -> tuple[float, float]:
        return self.lon0 + x / self.mi_per_deg_lon, self.lat0 + y / MILES_PER_DEG_LAT


def _level(spec: ScenarioSpec, x: float, y: float) -> int:
    r = max(abs(x), abs(y))
    level = 0
    for lvl, h in zip((3, 2, 1), spec.ring_half_widths):
        if r <= h:
            level = max(level, lvl)
    if spec.flood_box is not None:
        x0, y0, x1, y1 = spec.flood_box
        if x0 <= x <= x1 and y0 <= y <= y1:
            level += 1
    return level


def _boundary_distance(spec: ScenarioSpec, x: float, y: float) -> float:
    r = max(abs(x), abs(y))
    d = min((abs(r - h) for h in spec.ring_half_widths), default=math.inf)
    if spec.flood_box is not None:
        x0, y0, x1, y1 = spec.flood_box
        inside = x0 <= x <= x1 and y0 <= y <= y1
        dx = max(x0 - x, 0.0, x - x1)
        dy = max(y0 - y, 0.0, y - y1)
        fd = min(x - x0, x1 - x, y - y0, y1 - y) if inside else math.hypot(dx, dy)
        d = min(d, fd)
    return d


def _mean_vector_planar(headings, speeds):
    """Equal-weight mean of (heading, speed) vectors as (east, north)."""
    e = float(np.mean([s * math.sin(math.radians(h)) for h, s in zip(headings, speeds)]))
    n = float(np.mean([s * math.cos(math.radians(h)) for h, s in zip(headings, speeds)]))
    return e, n


def _random_point_in_square(rng, half: float) -> tuple[float, float]:
    return float(rng.uniform(-half, half)), float(rng.uniform(-half, half))


def _random_point_in_band(rng, inner: float, outer: float) -> tuple[float, float]:
    """Uniform-ish point whose Chebyshev radius lies in [inner, outer]."""
    r = float(rng.uniform(inner, outer))
    side = int(rng.integers(4))
    t = float(rng.uniform(-r, r))
    return [(r, t), (-r, t), (t, r), (t, -r)][side]


def _plan_user(spec: ScenarioSpec, policy: str, rng) -> dict:
    """Origin plus a list of (heading_deg, speed_mph, seconds) legs."""
    h = spec.ring_half_widths
    outer = h[-1] if h else 3.0
    n_legs = int(rng.integers(spec.legs[0], spec.legs[1] + 1))
    speeds = rng.uniform(*spec.speed_mph, size=n_legs)
    minutes = rng.uniform(*spec.leg_minutes, size=n_legs)

    if policy == "stationary":
        return {"origin": _random_point_in_square(rng, outer + 2.0), "legs": []}
    if policy == "random-walk":
        headings = rng.uniform(0.0, 360.0, size=n_legs)
        origin = _random_point_in_square(rng, outer + 2.0)
        return {"origin": origin, "legs": [(float(a), float(s), int(round(m * 60)))
                                            for a, s, m in zip(headings, speeds, minutes)]}

    if policy == "flee":
        origin = _random_point_in_square(rng, 0.8 * h[0])
        target = _random_point_in_band(rng, outer + 1.0, outer + 4.0)
    else:  # seek
        origin = _random_point_in_band(rng, outer + 1.0, outer + 4.0)
        target = _random_point_in_square(rng, 0.5 * h[0])
    base = math.degrees(math.atan2(target[0] - origin[0], target[1] - origin[1]))
    headings = base + rng.uniform(-35.0, 35.0, size=n_legs)
    # rotate and stretch the legs so the mean vector lands on the target
    e, n = _mean_vector_planar(headings, speeds)
    rot = base - math.degrees(math.atan2(e, n))
    headings = (headings + rot) % 360.0
    want = math.hypot(target[0] - origin[0], target[1] - origin[1])
    u = math.hypot(e, n)
    hours = float(minutes.sum()) / 60.0
    stretch = want / (u * hours)
    seconds = [max(60, int(round(m * 60 * stretch))) for m in minutes]
    return {"origin": origin, "legs": [(float(a), float(s), sec)
                                       for a, s, sec in zip(headings, speeds, seconds)]}


def _truth(spec: ScenarioSpec, policy: str, plan: dict) -> dict:
    ox, oy = plan["origin"]
    legs = plan["legs"]
    r_o = _level(spec, ox, oy)
    if not legs:
        return {"policy": policy, "origin_xy": [ox, oy], "endpoint_xy": [ox, oy], "magnitude_mph": 0.0,
                "azimuth_deg": None, "r_origin": r_o, "r_dest": r_o, "distance_mi": 0.0,
                "rbq_sign": 0, "degenerate": True, "reason": "stationary"}
    headings = [l[0] for l in legs]
    # realised speeds after rounding the leg durations to whole seconds
    dists = [l[1] * l[2] / 3600.0 for l in legs]
    hours = [l[2] / 3600.0 for l in legs]
    speeds = [d / t for d, t in zip(dists, hours)]
    e, n = _mean_vector_planar(headings, speeds)
    u = math.hypot(e, n)
    total_h = sum(hours)
    ex, ey = ox + e * total_h, oy + n * total_h
    r_d = _level(spec, ex, ey)
    d = sum(dists)
    score = (r_d - r_o) + r_d
    margin = min(_boundary_distance(spec, ox, oy), _boundary_distance(spec, ex, ey))
    return {
        "policy": policy,
        "origin_xy": [ox, oy],
        "endpoint_xy": [ex, ey],
        "magnitude_mph": u,
        "azimuth_deg": math.degrees(math.atan2(e, n)) % 360.0 if u > 1e-9 else None,
        "r_origin": r_o,
        "r_dest": r_d,
        "distance_mi": d,
        "rbq_sign": (score > 0) - (score < 0),
        "degenerate": margin < spec.boundary_margin_mi,
        "reason": "boundary-adjacent" if margin < spec.boundary_margin_mi else None,
    }


_PLACES = ("home", "the shelter", "work", "my sister's place", "the bridge", "the station", "the park")
_VERB_PHRASES = ("need to go check on family", "want to watch the water", "going to do a supply run",
                 "they say the roads are closing", "went out to watch the waves", "need batteries")
_NEUTRAL = ("update from the street", "power still on here", "lines at the store", "wind picking up",
            "checking the news", "quiet block for now")
_NEGATIVE = ("so scared right now", "terrible flooding everywhere", "this is awful and dangerous")
_POSITIVE = ("feeling safe and grateful", "amazing neighbors helping out", "thankful we are okay")
_TAGS = ("#sandy", "#storm", "#hurricane")


def _compose(spec: ScenarioSpec, rng, keyword: bool, others: list[str]) -> tuple[str, str | None]:
    parts = []
    if keyword:
        parts.append(f"at {_PLACES[int(rng.integers(len(_PLACES)))]}")
    if rng.random() < spec.p_verb:
        parts.append(_VERB_PHRASES[int(rng.integers(len(_VERB_PHRASES)))])
    if rng.random() < spec.p_emotional:
        pool = _NEGATIVE if rng.random() < 0.5 else _POSITIVE
        parts.append(pool[int(rng.integers(len(pool)))])
    elif not parts or rng.random() < 0.5:
        parts.append(_NEUTRAL[int(rng.integers(len(_NEUTRAL)))])
    if rng.random() < spec.p_event_hashtag:
        parts.append(_TAGS[int(rng.integers(len(_TAGS)))])
    reply_to = None
    if others and rng.random() < spec.p_mention:
        target = others[int(rng.integers(len(others)))]
        if rng.random() < 0.5:
            parts.insert(0, f"@{target}")
        else:
            reply_to = target
    return " ".join(parts), reply_to


@dataclass
class Scenario:
    spec: ScenarioSpec
    seed: int
    posts: list[dict]
    evac: dict
    flood: dict
    truth: dict


def _square(frame: _Frame, half: float) -> list[list[float]]:
    corners = [(-half, -half), (half, -half), (half, half), (-half, half), (-half, -half)]
    return [list(frame.to_lonlat(x, y)) for x, y in corners]


def _surface(spec: ScenarioSpec, frame: _Frame) -> tuple[dict, dict]:
    widths = list(spec.ring_half_widths)
    feats = []
    for i, (lvl, h) in enumerate(zip((3, 2, 1), widths)):
        rings = [_square(frame, h)]
        # the level-2 band is a ring with a hole; level 1 overlaps everything inside it
        if lvl == 2:
            rings.append(list(reversed(_square(frame, widths[0]))))
        feats.append({"type": "Feature", "properties": {"zone_level": lvl, "name": f"zone-{lvl}"},
                      "geometry": {"type": "Polygon", "coordinates": rings}})
    flood_feats = []
    if spec.flood_box is not None:
        x0, y0, x1, y1 = spec.flood_box
        ring = [list(frame.to_lonlat(x, y)) for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0))]
        flood_feats.append({"type": "Feature", "properties": {"name": "flood"},
                            "geometry": {"type": "Polygon", "coordinates": [ring]}})
    return ({"type": "FeatureCollection", "features": feats},
            {"type": "FeatureCollection", "features": flood_feats})


def _policy_counts(spec: ScenarioSpec) -> list[str]:
    total = sum(spec.policy_mix.values())
    quotas = {p: spec.n_users * spec.policy_mix.get(p, 0) / total for p in POLICIES}
    counts = {p: int(math.floor(q)) for p, q in quotas.items()}
    short = spec.n_users - sum(counts.values())
    for p in sorted(POLICIES, key=lambda p: (counts[p] - quotas[p], POLICIES.index(p)))[:short]:
        counts[p] += 1
    return [p for p in POLICIES for _ in range(counts[p])]


def synthesize_scenario(spec: ScenarioSpec, seed: int) -> Scenario:
    spec.validate()
    frame = _Frame(*spec.center)
    policies = _policy_counts(spec)
    _rng(seed, 0).shuffle(policies)
    users = [f"u{i + 1:03d}" for i in range(spec.n_users)]
    start = datetime.fromisoformat(spec.start.replace("Z", "+00:00"))
    posts, truth = [], {}
    for i, (user, policy) in enumerate(zip(users, policies), start=1):
        rng = _rng(seed, i)
        plan = _plan_user(spec, policy, rng)
        truth[user] = _truth(spec, policy, plan)
        others = [u for u in users if u != user] + ["nycem", "fema"]
        t = start + timedelta(seconds=int(rng.integers(0, 36 * 3600)))
        x, y = plan["origin"]
        fixes = [(t, x, y)]
        if plan["legs"]:
            for heading, speed, seconds in plan["legs"]:
                dist = speed * seconds / 3600.0
                x += dist * math.sin(math.radians(heading))
                y += dist * math.cos(math.radians(heading))
                t += timedelta(seconds=seconds)
                fixes.append((t, x, y))
        else:
            for _ in range(int(rng.integers(2, 5))):
                t += timedelta(minutes=int(rng.integers(10, 90)))
                fixes.append((t, x, y))
        for k, (ts, fx, fy) in enumerate(fixes):
            lon, lat = frame.to_lonlat(fx, fy)
            text, reply_to = _compose(spec, rng, keyword=(k == 0), others=others)
            posts.append({"id": f"{user}-{k:03d}", "user": user, "ts": ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
                          "lat": lat, "lon": lon, "text": text, "reply_to": reply_to})
            if rng.random() < spec.p_ungeocoded:
                text, reply_to = _compose(spec, rng, keyword=False, others=others)
                posts.append({"id": f"{user}-{k:03d}n", "user": user,
                              "ts": (ts + timedelta(minutes=1)).strftime("%Y-%m-%dT%H:%M:%SZ"),
                              "lat": None, "lon": None, "text": text, "reply_to": reply_to})
    posts.sort(key=lambda p: (p["ts"], p["id"]))
    evac, flood = _surface(spec, frame)
    return Scenario(spec, seed, posts, evac, flood, {"seed": seed, "users": truth})


def write_scenario(scenario: Scenario, out_dir: str | Path) -> Path:
    """Write posts, surface, truth and a runnable pipeline config; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "posts.jsonl").write_text(
        "".join(json.dumps(p, sort_keys=True) + "\n" for p in scenario.posts), encoding="utf-8")
    (out / "evac.geojson").write_text(json.dumps(scenario.evac, indent=1) + "\n", encoding="utf-8")
    (out / "flood.geojson").write_text(json.dumps(scenario.flood, indent=1) + "\n", encoding="utf-8")
    truth = {"spec": asdict(scenario.spec), **scenario.truth}
    (out / "truth.json").write_text(json.dumps(truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    config = {
        "paths": {"posts": "posts.jsonl", "evac": "evac.geojson", "flood": "flood.geojson"},
        "seed": scenario.seed,
        "risk_scheme": "pilot-0-4",
    }
    path = out / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=True), encoding="utf-8")
    return path
