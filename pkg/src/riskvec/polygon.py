"""Planar point-in-polygon tests on lon/lat rings.

Polygons are closed sets: a point lying on any ring edge counts as inside.
Interior membership uses even-odd ray casting over all rings of the
polygon, so holes fall out of the parity count. Every comparison is done
with cross products rather than computed intersection abscissae, which
keeps the tests exact whenever the coordinates are exactly representable
(e.g. dyadic fractions).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import SurfaceLoadError

Ring = tuple[tuple[float, float], ...]


def _on_edge(x, y, ax, ay, bx, by) -> bool:
    if (bx - ax) * (y - ay) != (by - ay) * (x - ax):
        return False
    return min(ax, bx) <= x <= max(ax, bx) and min(ay, by) <= y <= max(ay, by)


def ring_crossings(ring: Ring, x: float, y: float) -> int:
    """Number of ring edges crossed by the ray from (x, y) towards +x.

    Edges are half-open in y, so a ray through a vertex is counted once.
    """
    count = 0
    ax, ay = ring[-1]
    for bx, by in ring:
        if (ay > y) != (by > y):
            # is x strictly left of the edge's intersection with the ray?
            lhs = (x - ax) * (by - ay)
            rhs = (y - ay) * (bx - ax)
            if (lhs < rhs) if by > ay else (lhs > rhs):
                count += 1
        ax, ay = bx, by
    return count


def ring_touches(ring: Ring, x: float, y: float) -> bool:
    ax, ay = ring[-1]
    for bx, by in ring:
        if _on_edge(x, y, ax, ay, bx, by):
            return True
        ax, ay = bx, by
    return False


@dataclass(frozen=True)
class Polygon:
    """An exterior ring plus optional holes, as (lon, lat) vertex tuples.

    Rings are stored open (the closing vertex is not repeated).
    """

    exterior: Ring
    holes: tuple[Ring, ...] = ()
    bbox: tuple[float, float, float, float] = field(init=False)

    def __post_init__(self):
        xs = [p[0] for p in self.exterior]
        ys = [p[1] for p in self.exterior]
        object.__setattr__(self, "bbox", (min(xs), min(ys), max(xs), max(ys)))

    @property
    def rings(self) -> tuple[Ring, ...]:
        return (self.exterior, *self.holes)

    def contains(self, lon: float, lat: float) -> bool:
        x0, y0, x1, y1 = self.bbox
        if not (x0 <= lon <= x1 and y0 <= lat <= y1):
            return False
        rings = self.rings
        if any(ring_touches(r, lon, lat) for r in rings):
            return True
        return sum(ring_crossings(r, lon, lat) for r in rings) % 2 == 1


def _parse_ring(coords, where: str) -> Ring:
    try:
        pts = [(float(c[0]), float(c[1])) for c in coords]
    except (TypeError, ValueError, IndexError) as exc:
        raise SurfaceLoadError(f"{where}: bad coordinates ({exc})") from None
    if len(pts) < 4:
        raise SurfaceLoadError(f"{where}: ring needs at least 4 positions, got {len(pts)}")
    if pts[0] != pts[-1]:
        raise SurfaceLoadError(f"{where}: ring is not closed")
    if not all(math.isfinite(v) for p in pts for v in p):
        raise SurfaceLoadError(f"{where}: non-finite coordinate")
    return tuple(pts[:-1])


def polygons_from_geometry(geometry: dict, where: str) -> list[Polygon]:
    if not isinstance(geometry, dict):
        raise SurfaceLoadError(f"{where}: missing geometry")
    kind = geometry.get("type")
    coords = geometry.get("coordinates")
    if kind == "Polygon":
        parts = [coords]
    elif kind == "MultiPolygon":
        parts = coords
    else:
        raise SurfaceLoadError(f"{where}: unsupported geometry type {kind!r}")
    if not parts:
        raise SurfaceLoadError(f"{where}: empty geometry")
    out = []
    for i, rings in enumerate(parts):
        if not rings:
            raise SurfaceLoadError(f"{where}: polygon {i} has no rings")
        parsed = [_parse_ring(r, f"{where} polygon {i} ring {j}") for j, r in enumerate(rings)]
        out.append(Polygon(parsed[0], tuple(parsed[1:])))
    return out


def read_feature_collection(path: str | Path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SurfaceLoadError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise SurfaceLoadError(f"{path}: expected a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise SurfaceLoadError(f"{path}: 'features' must be a list")
    return features


def load_polygon_set(path: str | Path) -> list[Polygon]:
    """Every polygon of every feature in a GeoJSON FeatureCollection."""
    polys = []
    for i, feat in enumerate(read_feature_collection(path)):
        polys.extend(polygons_from_geometry(feat.get("geometry"), f"{path} feature {i}"))
    return polys


class GridIndex:
    """Uniform grid over polygon bounding boxes.

    ``candidates(x, y)`` returns the ids of every polygon whose bbox could
    contain the point. Each bbox is registered one cell wider on every
    side, so floor rounding at cell borders can never lose a polygon.
    """

    def __init__(self, boxes: Sequence[tuple[float, float, float, float]], cells_per_side: int | None = None):
        self._cells: dict[tuple[int, int], tuple[int, ...]] = {}
        if not boxes:
            return
        self.x0 = min(b[0] for b in boxes)
        self.y0 = min(b[1] for b in boxes)
        x1 = max(b[2] for b in boxes)
        y1 = max(b[3] for b in boxes)
        self.side = cells_per_side or max(1, min(64, int(math.sqrt(len(boxes)) * 4)))
        self.dx = (x1 - self.x0) / self.side or 1.0
        self.dy = (y1 - self.y0) / self.side or 1.0
        cells: dict[tuple[int, int], list[int]] = defaultdict(list)
        for idx, (bx0, by0, bx1, by1) in enumerate(boxes):
            i0, j0 = self._cell(bx0, by0)
            i1, j1 = self._cell(bx1, by1)
            for i in range(max(0, i0 - 1), min(self.side - 1, i1 + 1) + 1):
                for j in range(max(0, j0 - 1), min(self.side - 1, j1 + 1) + 1):
                    cells[(i, j)].append(idx)
        self._cells = {k: tuple(v) for k, v in cells.items()}

    def _cell(self, x: float, y: float) -> tuple[int, int]:
        i = min(self.side - 1, max(0, int((x - self.x0) // self.dx)))
        j = min(self.side - 1, max(0, int((y - self.y0) // self.dy)))
        return i, j

    def candidates(self, x: float, y: float) -> tuple[int, ...]:
        if not self._cells:
            return ()
        return self._cells.get(self._cell(x, y), ())
