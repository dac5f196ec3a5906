"""Spherical geodesy and trajectory construction.

Everything here works on a spherical Earth and reports distances in
miles, durations in hours and speeds in mph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Sequence

from .errors import InsufficientDataError, UndefinedBearingError, ValidationError

EARTH_RADIUS_MI = 3958.761
# hops shorter than this are GPS jitter, not movement
JITTER_FLOOR_MI = 0.01
# decimal places used to decide whether two fixes are the same place (~1 m)
LOCATION_DECIMALS = 5
MIN_SEGMENT_SECONDS = 1


def _normalize_lon(lon: float) -> float:
    lon = math.fmod(lon, 360.0)
    if lon <= -180.0:
        lon += 360.0
    elif lon > 180.0:
        lon -= 360.0
    return lon


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or math.isnan(self.lat):
            raise ValidationError(f"latitude out of range: {self.lat}")
        if not math.isfinite(self.lon):
            raise ValidationError(f"longitude not finite: {self.lon}")
        if not (-180.0 < self.lon <= 180.0):
            object.__setattr__(self, "lon", _normalize_lon(self.lon))

    def key(self, decimals: int = LOCATION_DECIMALS) -> tuple[float, float]:
        """Rounded (lat, lon) pair used to test two fixes for sameness."""
        return (round(self.lat, decimals), round(self.lon, decimals))


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points, in miles."""
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_MI * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth at ``a`` of the great circle towards ``b``.

    Degrees clockwise from true north, in [0, 360).

    Raises:
        UndefinedBearingError: if the two points coincide.
    """
    if a == b:
        raise UndefinedBearingError(f"bearing undefined between identical points {a}")
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlon = math.radians(b.lon - a.lon)
    y = math.sin(dlon) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    theta = math.degrees(math.atan2(y, x)) % 360.0
    # -0.0 % 360 and tiny negatives can round up to exactly 360
    return 0.0 if theta >= 360.0 else theta


def forward_point(origin: GeoPoint, azimuth: float, distance: float) -> GeoPoint:
    """Point reached by travelling ``distance`` miles from ``origin`` along ``azimuth``."""
    if distance < 0:
        raise ValidationError(f"distance must be non-negative, got {distance}")
    if distance == 0:
        return origin
    delta = distance / EARTH_RADIUS_MI
    theta = math.radians(azimuth)
    lat1, lon1 = math.radians(origin.lat), math.radians(origin.lon)
    sin_lat2 = math.sin(lat1) * math.cos(delta) + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    lat2 = math.asin(max(-1.0, min(1.0, sin_lat2)))
    lon2 = lon1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(lat1),
        math.cos(delta) - math.sin(lat1) * sin_lat2,
    )
    return GeoPoint(math.degrees(lat2), _normalize_lon(math.degrees(lon2)))


@dataclass(frozen=True)
class Segment:
    origin: GeoPoint
    destination: GeoPoint
    depart: datetime
    arrive: datetime
    distance: float
    duration: float
    azimuth: float

    @property
    def speed(self) -> float:
        return self.distance / self.duration


@dataclass(frozen=True)
class Trajectory:
    user_id: str
    segments: tuple[Segment, ...]
    first_point: GeoPoint
    total_distance: float = field(init=False)
    total_duration: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total_distance", math.fsum(s.distance for s in self.segments))
        # wall-clock span; equals the summed segment durations because segments are contiguous
        seconds = (self.segments[-1].arrive - self.segments[0].depart).total_seconds() if self.segments else 0.0
        object.__setattr__(self, "total_duration", seconds / 3600.0)

    @property
    def average_speed(self) -> float:
        if self.total_duration == 0:
            return 0.0
        return self.total_distance / self.total_duration

    def headings(self) -> list[tuple[float, float]]:
        """(azimuth, speed) pairs, one per segment."""
        return [(s.azimuth, s.speed) for s in self.segments]


def _clean_fixes(posts: Iterable) -> list[tuple[datetime, GeoPoint]]:
    fixes = [(p.timestamp, p.location) for p in posts if p.location is not None]
    # stable sort keeps input order among equal timestamps
    fixes.sort(key=lambda f: f[0])
    cleaned: list[tuple[datetime, GeoPoint]] = []
    for ts, loc in fixes:
        if cleaned and cleaned[-1][0] == ts and cleaned[-1][1].key() == loc.key():
            continue
        cleaned.append((ts, loc))
    return cleaned


def build_trajectory(posts: Sequence, user_id: str | None = None) -> Trajectory:
    """Chain a user's geocoded posts into movement segments.

    ``posts`` are objects with ``timestamp`` and ``location`` attributes;
    those without a location are ignored. Posts at the same instant and
    place collapse into one fix. A hop shorter than the jitter floor is
    skipped, so the next segment departs from the last accepted fix.
    Hops between different places at the same instant get a one-second
    duration.

    Raises:
        InsufficientDataError: when fewer than two usable fixes remain or
            no hop survives the jitter floor.
    """
    if user_id is None and posts:
        user_id = getattr(posts[0], "user_id", "")
    fixes = _clean_fixes(posts)
    if len({loc.key() for _, loc in fixes}) < 2:
        raise InsufficientDataError(f"user {user_id!r}: fewer than 2 distinct locations")

    segments: list[Segment] = []
    anchor_time, anchor = fixes[0]
    for ts, loc in fixes[1:]:
        if loc.key() == anchor.key():
            continue
        distance = haversine_distance(anchor, loc)
        if distance < JITTER_FLOOR_MI:
            continue
        arrive = max(ts, anchor_time + timedelta(seconds=MIN_SEGMENT_SECONDS))
        duration = (arrive - anchor_time).total_seconds() / 3600.0
        segments.append(
            Segment(anchor, loc, anchor_time, arrive, distance, duration, initial_bearing(anchor, loc))
        )
        anchor_time, anchor = arrive, loc

    if not segments:
        raise InsufficientDataError(f"user {user_id!r}: no movement above the jitter floor")
    return Trajectory(user_id or "", tuple(segments), fixes[0][1])
