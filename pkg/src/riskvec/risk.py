"""Graded risk surface and the risk behavior quotient (RBQ).

The pilot scheme grades a point 0-3 by the highest evacuation zone
containing it and adds 1 if any flood polygon contains it. The
``figure1`` scheme is the illustrative A/B/C grading: zones 3/2/1 score
4/3/2, everything else scores 1 and flooding is ignored.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import EmptyInputError, SurfaceLoadError, ValidationError
from .geo import GeoPoint, Trajectory
from .meanvec import MeanVector
from .polygon import GridIndex, Polygon, polygons_from_geometry, read_feature_collection

PILOT = "pilot-0-4"
FIGURE1 = "figure1-1-4"
SCHEMES = (PILOT, FIGURE1)
_FIGURE1_LEVELS = {1: 2, 2: 3, 3: 4}


@dataclass(frozen=True)
class RiskZone:
    polygon: Polygon
    base_level: int
    name: str = ""


@dataclass(frozen=True)
class RiskSurface:
    zones: tuple[RiskZone, ...]
    flood: tuple[Polygon, ...] = ()
    scheme: str = PILOT
    outside_level: int = 0
    _zone_index: GridIndex = field(init=False, repr=False, compare=False)
    _flood_index: GridIndex = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown risk scheme {self.scheme!r}; expected one of {SCHEMES}")
        for z in self.zones:
            if z.base_level not in (1, 2, 3):
                raise ValidationError(f"zone {z.name!r}: base_level must be 1, 2 or 3")
        object.__setattr__(self, "_zone_index", GridIndex([z.polygon.bbox for z in self.zones]))
        object.__setattr__(self, "_flood_index", GridIndex([p.bbox for p in self.flood]))

    def zone_level(self, lon: float, lat: float) -> int:
        level = 0
        for i in self._zone_index.candidates(lon, lat):
            zone = self.zones[i]
            if zone.base_level > level and zone.polygon.contains(lon, lat):
                level = zone.base_level
        return level

    def flooded(self, lon: float, lat: float) -> bool:
        return any(self.flood[i].contains(lon, lat) for i in self._flood_index.candidates(lon, lat))


def _zone_level_of(feature: dict, where: str) -> int:
    props = feature.get("properties") or {}
    level = props.get("zone_level")
    # bools are ints in Python; reject them explicitly
    if isinstance(level, bool) or not isinstance(level, (int, float)) or level != int(level) \
            or int(level) not in (1, 2, 3):
        raise SurfaceLoadError(f"{where}: zone_level must be an integer in {{1, 2, 3}}, got {level!r}")
    return int(level)


def load_surface(evac: str | Path, flood: str | Path | None = None, scheme: str = PILOT) -> RiskSurface:
    """Build a surface from an evacuation-zone and a flood FeatureCollection."""
    zones = []
    for i, feat in enumerate(read_feature_collection(evac)):
        props = feat.get("properties") or {}
        name = str(props.get("name", feat.get("id", i)))
        where = f"{evac} feature {i} ({name})"
        level = _zone_level_of(feat, where)
        for poly in polygons_from_geometry(feat.get("geometry"), where):
            zones.append(RiskZone(poly, level, name))
    flood_polys = []
    if flood is not None:
        for i, feat in enumerate(read_feature_collection(flood)):
            flood_polys.extend(polygons_from_geometry(feat.get("geometry"), f"{flood} feature {i}"))
    return RiskSurface(tuple(zones), tuple(flood_polys), scheme)


def risk_at(surface: RiskSurface, p: GeoPoint) -> int:
    """Integer risk level of a point under the surface's scheme."""
    base = surface.zone_level(p.lon, p.lat)
    if surface.scheme == FIGURE1:
        return _FIGURE1_LEVELS.get(base, 1)
    return base + (1 if surface.flooded(p.lon, p.lat) else 0)


def rbq(r_origin: float, r_dest: float, distance: float, speed: float) -> float:
    """Risk behavior quotient ``((r_dest - r_origin) + r_dest) * (distance * speed)``."""
    return ((r_dest - r_origin) + r_dest) * (distance * speed)


@dataclass(frozen=True)
class RbqRecord:
    user_id: str
    r_origin: int
    r_dest: int
    distance: float
    speed: float
    rbq: float


def user_rbq(traj: Trajectory, mv: MeanVector, surface: RiskSurface) -> RbqRecord:
    r_o = risk_at(surface, mv.origin)
    r_d = risk_at(surface, mv.endpoint)
    d = traj.total_distance
    s = traj.average_speed
    return RbqRecord(traj.user_id, r_o, r_d, d, s, rbq(r_o, r_d, d, s))


def rbq_summary(records: Sequence[RbqRecord]) -> dict:
    if not records:
        raise EmptyInputError("rbq_summary needs at least one record")
    values = [r.rbq for r in records]
    return {
        "n": len(values),
        "min": min(values),
        "max": max(values),
        "mean": math.fsum(values) / len(values),
        "median": statistics.median(values),
    }


RBQ_COLUMNS = ("user_id", "r_origin", "r_dest", "distance_mi", "speed_mph", "rbq")


def rbq_csv(records: Sequence[RbqRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RBQ_COLUMNS)
    for r in sorted(records, key=lambda r: r.user_id):
        w.writerow([r.user_id, r.r_origin, r.r_dest, repr(r.distance), repr(r.speed), repr(r.rbq)])
    return buf.getvalue()


def read_rbq_csv(text: str) -> list[RbqRecord]:
    rows = csv.DictReader(io.StringIO(text))
    return [RbqRecord(row["user_id"], int(row["r_origin"]), int(row["r_dest"]),
                      float(row["distance_mi"]), float(row["speed_mph"]), float(row["rbq"]))
            for row in rows]
