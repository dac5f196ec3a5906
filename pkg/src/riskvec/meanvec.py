"""Mean movement vectors via east/north component averaging.

This is the wind-direction averaging scheme: each segment contributes a
vector of length ``speed`` pointing along its azimuth, the east-west and
north-south components are averaged with equal weight, and the resultant
is turned back into a magnitude and a compass azimuth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyInputError
from .geo import GeoPoint, Trajectory, forward_point

# below this the resultant has no meaningful direction (mph)
ZERO_MAGNITUDE = 1e-9


def mean_vector(headings: Iterable[tuple[float, float]]) -> tuple[float, float | None]:
    """Average ``(azimuth_deg, speed)`` pairs into ``(magnitude, azimuth_deg)``.

    The components carry a leading minus sign (the wind "blowing from"
    convention) and the final +180 degree turn undoes it, so a single input
    vector maps to itself. The azimuth is ``None`` when the resultant
    magnitude is below ``ZERO_MAGNITUDE``.
    """
    east = []
    north = []
    for azimuth, speed in headings:
        theta = math.radians(azimuth)
        east.append(speed * math.sin(theta))
        north.append(speed * math.cos(theta))
    n = len(east)
    if n == 0:
        raise EmptyInputError("mean_vector needs at least one heading")
    v_e = -math.fsum(east) / n
    v_n = -math.fsum(north) / n
    magnitude = math.hypot(v_e, v_n)
    if magnitude < ZERO_MAGNITUDE:
        return magnitude, None
    azimuth = (math.degrees(math.atan2(v_e, v_n)) + 180.0) % 360.0
    return magnitude, 0.0 if azimuth >= 360.0 else azimuth


@dataclass(frozen=True)
class MeanVector:
    user_id: str
    magnitude: float
    azimuth: float | None
    n: int
    origin: GeoPoint
    endpoint: GeoPoint
    displacement: float
    duration: float


def user_mean_vector(traj: Trajectory) -> MeanVector:
    """Mean vector of a trajectory, anchored at its first fix.

    The endpoint lies ``magnitude * total_duration`` miles from the origin,
    so a single-segment trajectory ends exactly at its real destination.
    """
    if not traj.segments:
        raise EmptyInputError(f"trajectory for {traj.user_id!r} has no segments")
    magnitude, azimuth = mean_vector(traj.headings())
    if azimuth is None:
        return MeanVector(traj.user_id, magnitude, None, len(traj.segments),
                          traj.first_point, traj.first_point, 0.0, traj.total_duration)
    displacement = magnitude * traj.total_duration
    endpoint = forward_point(traj.first_point, azimuth, displacement)
    return MeanVector(traj.user_id, magnitude, azimuth, len(traj.segments),
                      traj.first_point, endpoint, displacement, traj.total_duration)


@dataclass(frozen=True)
class GroupVector:
    origin: GeoPoint
    endpoint: GeoPoint
    magnitude: float
    azimuth: float | None
    n: int
    displacement: float


def group_mean_vector(vectors: Sequence[MeanVector]) -> GroupVector:
    """Average a set of per-user vectors into one origin/endpoint pair."""
    if not vectors:
        raise EmptyInputError("group_mean_vector needs at least one member vector")
    n = len(vectors)
    origin = GeoPoint(math.fsum(v.origin.lat for v in vectors) / n,
                      math.fsum(v.origin.lon for v in vectors) / n)
    magnitude, azimuth = mean_vector((v.azimuth or 0.0, v.magnitude) for v in vectors)
    if azimuth is None:
        return GroupVector(origin, origin, magnitude, None, n, 0.0)
    mean_duration = math.fsum(v.duration for v in vectors) / n
    displacement = magnitude * mean_duration
    return GroupVector(origin, forward_point(origin, azimuth, displacement),
                       magnitude, azimuth, n, displacement)


def _lonlat(p: GeoPoint) -> list[float]:
    return [p.lon, p.lat]


def vectors_geojson(vectors: Sequence[MeanVector], trajectories: dict[str, Trajectory] | None = None,
                    excluded: Sequence[dict] | None = None) -> dict:
    """One LineString feature per user, origin to endpoint."""
    features = []
    for v in sorted(vectors, key=lambda v: v.user_id):
        props = {
            "user": v.user_id,
            "magnitude_mph": v.magnitude,
            "azimuth_deg": v.azimuth,
            "displacement_mi": v.displacement,
            "n_segments": v.n,
            "duration_h": v.duration,
        }
        if trajectories is not None and v.user_id in trajectories:
            traj = trajectories[v.user_id]
            props["total_distance_mi"] = traj.total_distance
            props["average_speed_mph"] = traj.average_speed
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString",
                         "coordinates": [_lonlat(v.origin), _lonlat(v.endpoint)]},
            "properties": props,
        })
    collection = {"type": "FeatureCollection", "features": features}
    if excluded is not None:
        # foreign member: users dropped before a vector could be computed
        collection["excluded"] = list(excluded)
    return collection


def group_geojson(group: GroupVector) -> dict:
    props = {"n_users": group.n, "magnitude_mph": group.magnitude,
             "azimuth_deg": group.azimuth, "displacement_mi": group.displacement}
    return {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature",
             "geometry": {"type": "LineString",
                          "coordinates": [_lonlat(group.origin), _lonlat(group.endpoint)]},
             "properties": {**props, "role": "vector"}},
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": _lonlat(group.origin)},
             "properties": {"role": "origin"}},
            {"type": "Feature", "geometry": {"type": "Point", "coordinates": _lonlat(group.endpoint)},
             "properties": {"role": "destination"}},
        ],
    }
