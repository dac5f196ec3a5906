"""Regenerate src/riskvec/data/figure1/: the two illustrative users.

User 1 covers 6 miles in one hour from a moderate (3) to a low (2) zone.
User 2 wanders 22 miles in 66 minutes between the same two zones. The
last fix of each user is nudged by a few ulps so the summed haversine
distances are exactly 6.0 and 22.0 miles.
"""

import json
import math
from datetime import datetime, timedelta, timezone
from pathlib import Path

from riskvec.geo import GeoPoint, forward_point, haversine_distance

OUT = Path(__file__).resolve().parents[1] / "src" / "riskvec" / "data" / "figure1"
T0 = datetime(2012, 10, 29, 14, 0, tzinfo=timezone.utc)


def box(lon0, lat0, lon1, lat1):
    return [[[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]]


def _nudge(x, steps):
    for _ in range(abs(steps)):
        x = math.nextafter(x, math.inf if steps > 0 else -math.inf)
    return x


def exact_total(points, target, reach=250):
    """Nudge the last point by a few ulps until the path length is exactly ``target``.

    One ulp of latitude moves the distance by hundreds of ulps, so this
    walks a small 2-D neighbourhood of (lat, lon) offsets and relies on
    rounding noise to land on the target.
    """
    *head, last = points
    partial = [haversine_distance(a, b) for a, b in zip(points[:-2], points[1:-1])]
    ring = sorted(((i, j) for i in range(-reach, reach + 1) for j in range(-reach, reach + 1)),
                  key=lambda ij: (abs(ij[0]) + abs(ij[1]), ij))
    for i, j in ring:
        cand = GeoPoint(_nudge(last.lat, i), _nudge(last.lon, j))
        if math.fsum(partial + [haversine_distance(head[-1], cand)]) == target:
            return head + [cand]
    raise RuntimeError("could not hit the target length exactly")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    evac = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"name": "A (coastal)", "zone_level": 3},
         "geometry": {"type": "Polygon", "coordinates": box(-74.05, 40.55, -73.95, 40.65)}},
        {"type": "Feature", "properties": {"name": "B (Queens)", "zone_level": 2},
         "geometry": {"type": "Polygon", "coordinates": box(-73.97, 40.72, -73.85, 40.80)}},
        {"type": "Feature", "properties": {"name": "C (Jamaica)", "zone_level": 1},
         "geometry": {"type": "Polygon", "coordinates": box(-73.85, 40.64, -73.70, 40.72)}},
    ]}
    flood = {"type": "FeatureCollection", "features": []}

    o1 = GeoPoint(40.745, -73.90)
    u1 = exact_total([o1, forward_point(o1, 125.0, 6.0)], 6.0)

    o2 = GeoPoint(40.75, -73.92)
    pts = [o2]
    for heading in (100.0, 165.0, 40.0, 220.0, 20.0, 155.0):
        pts.append(forward_point(pts[-1], heading, 22.0 / 6))
    u2 = exact_total(pts, 22.0)

    texts1 = ["at home in Queens, water rising #sandy", "driving to my cousin in Jamaica"]
    texts2 = ["at the corner store", "go go go, roads still open", "driving south first",
              "@u1 you ok?", "heading back north", "almost there", "made it to Jamaica #storm"]
    posts = []
    for i, p in enumerate(u1):
        posts.append({"id": f"u1-{i}", "user": "u1", "ts": (T0 + timedelta(hours=i)).strftime("%Y-%m-%dT%H:%M:%SZ"),
                      "lat": p.lat, "lon": p.lon, "text": texts1[i], "reply_to": None})
    for i, p in enumerate(u2):
        posts.append({"id": f"u2-{i}", "user": "u2",
                      "ts": (T0 + timedelta(minutes=11 * i)).strftime("%Y-%m-%dT%H:%M:%SZ"),
                      "lat": p.lat, "lon": p.lon, "text": texts2[i], "reply_to": None})
    posts.sort(key=lambda r: (r["ts"], r["id"]))

    (OUT / "evac.geojson").write_text(json.dumps(evac, indent=1) + "\n")
    (OUT / "flood.geojson").write_text(json.dumps(flood, indent=1) + "\n")
    (OUT / "posts.jsonl").write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in posts))
    (OUT / "config.yaml").write_text(
        "paths:\n  posts: posts.jsonl\n  evac: evac.geojson\n  flood: flood.geojson\n"
        "risk_scheme: figure1-1-4\nseed: 0\n")


if __name__ == "__main__":
    main()
