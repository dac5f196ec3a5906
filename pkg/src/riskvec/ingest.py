"""Post parsing, user selection and the peer interaction graph."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError
from .geo import GeoPoint
from .polygon import Polygon
from .text import extract_hashtags, extract_mentions, tokenize

DEFAULT_KEYWORDS = ("sandy", "at", "go", "drive", "driving")
_FRACTION = re.compile(r"(?<=:\d\d)[.,]\d+")


@dataclass(frozen=True)
class TimedPost:
    post_id: str
    user_id: str
    timestamp: datetime
    location: GeoPoint | None
    text: str
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    reply_to: str | None = None

    def to_record(self) -> dict:
        """The JSONL wire form of this post."""
        return {
            "id": self.post_id,
            "user": self.user_id,
            "ts": self.timestamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "lat": None if self.location is None else self.location.lat,
            "lon": None if self.location is None else self.location.lon,
            "text": self.text,
            "reply_to": self.reply_to,
        }


@dataclass(frozen=True)
class ParseIssue:
    line: int
    message: str


def parse_timestamp(value: str) -> datetime:
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    # timestamps keep whole seconds; dropping the fraction also sidesteps
    # fromisoformat's 3-or-6-digit restriction on older Pythons
    text = _FRACTION.sub("", text)
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {value!r} has no UTC offset")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def post_from_record(rec: dict) -> TimedPost:
    if not isinstance(rec, dict):
        raise ValueError("record is not a JSON object")
    for key in ("id", "user", "ts"):
        if rec.get(key) in (None, ""):
            raise ValueError(f"missing required field {key!r}")
    text = rec.get("text") or ""
    if not isinstance(text, str):
        raise ValueError("text must be a string")
    lat, lon = rec.get("lat"), rec.get("lon")
    if (lat is None) != (lon is None):
        raise ValueError("lat and lon must both be present or both null")
    location = None
    if lat is not None:
        if isinstance(lat, bool) or isinstance(lon, bool):
            raise ValueError("coordinates must be numbers")
        try:
            location = GeoPoint(float(lat), float(lon))
        except (TypeError, ValidationError) as exc:
            raise ValueError(str(exc)) from None
    reply_to = rec.get("reply_to")
    return TimedPost(
        post_id=str(rec["id"]),
        user_id=str(rec["user"]),
        timestamp=parse_timestamp(rec["ts"]),
        location=location,
        text=text,
        hashtags=tuple(extract_hashtags(text)),
        mentions=tuple(extract_mentions(text)),
        reply_to=None if reply_to in (None, "") else str(reply_to),
    )


def parse_posts(lines: Iterable[str]) -> tuple[list[TimedPost], list[ParseIssue]]:
    """Parse JSONL post records.

    Returns the posts in input order and one ``ParseIssue`` per rejected
    line (malformed JSON, missing ``id``/``user``/``ts``, bad coordinates,
    duplicate ``id``). Blank lines are skipped silently.
    """
    posts: list[TimedPost] = []
    issues: list[ParseIssue] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            post = post_from_record(json.loads(line))
        except (json.JSONDecodeError, ValueError) as exc:
            issues.append(ParseIssue(lineno, str(exc)))
            continue
        if post.post_id in seen:
            issues.append(ParseIssue(lineno, f"duplicate post id {post.post_id!r}"))
            continue
        seen.add(post.post_id)
        posts.append(post)
    return posts, issues


def read_posts(path: str | Path) -> tuple[list[TimedPost], list[ParseIssue]]:
    with open(path, encoding="utf-8") as fh:
        return parse_posts(fh)


def write_posts(posts: Iterable[TimedPost]) -> str:
    return "".join(json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True) + "\n" for p in posts)


@dataclass(frozen=True)
class SelectionConfig:
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    min_distinct_locations: int = 2
    study_area: tuple[Polygon, ...] | None = None
    time_window: tuple[datetime, datetime] | None = None

    def __post_init__(self):
        if self.min_distinct_locations < 1:
            raise ValidationError("min_distinct_locations must be >= 1")
        object.__setattr__(self, "keywords", tuple(k.lower() for k in self.keywords))
        if self.time_window is not None and self.time_window[0] > self.time_window[1]:
            raise ValidationError("time_window start is after its end")


def group_by_user(posts: Iterable[TimedPost]) -> dict[str, list[TimedPost]]:
    by_user: dict[str, list[TimedPost]] = {}
    for p in posts:
        by_user.setdefault(p.user_id, []).append(p)
    return by_user


def _earliest_geocoded(posts: Sequence[TimedPost]) -> TimedPost | None:
    located = [p for p in posts if p.location is not None]
    if not located:
        return None
    # ties broken by post id so the choice never depends on input order
    return min(located, key=lambda p: (p.timestamp, p.post_id))


def select_users(posts: Iterable[TimedPost], cfg: SelectionConfig = SelectionConfig()) -> set[str]:
    """Users who moved, used a keyword and (optionally) started inside the study area.

    Posts outside ``cfg.time_window`` are ignored before any test runs.
    """
    keywords = set(cfg.keywords)
    selected = set()
    for user, mine in group_by_user(posts).items():
        if cfg.time_window is not None:
            start, end = cfg.time_window
            mine = [p for p in mine if start <= p.timestamp <= end]
        places = {p.location.key() for p in mine if p.location is not None}
        if len(places) < cfg.min_distinct_locations:
            continue
        if not any(keywords.intersection(tokenize(p.text)) for p in mine):
            continue
        if cfg.study_area is not None:
            first = _earliest_geocoded(mine)
            loc = first.location
            if not any(poly.contains(loc.lon, loc.lat) for poly in cfg.study_area):
                continue
        selected.add(user)
    return selected


@dataclass
class PeerGraph:
    """Directed who-addressed-whom graph: u -> v when u replied to or mentioned v."""

    edges: dict[str, set[str]] = field(default_factory=dict)
    external: set[str] = field(default_factory=set)

    def peers(self, user: str) -> set[str]:
        return self.edges.get(user, set())

    def out_degree(self, user: str) -> int:
        return len(self.peers(user))

    def to_json(self) -> dict:
        return {
            "edges": {u: sorted(vs) for u, vs in sorted(self.edges.items())},
            "external": sorted(self.external),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PeerGraph":
        return cls({u: set(vs) for u, vs in doc.get("edges", {}).items()}, set(doc.get("external", ())))


def build_peer_graph(posts: Iterable[TimedPost], users: Iterable[str]) -> PeerGraph:
    """Interaction edges out of ``users``.

    Targets are matched to corpus authors case-insensitively (handles are
    case-insensitive); targets that never post are kept and flagged
    external.
    """
    posts = list(posts)
    authors = {p.user_id for p in posts}
    canonical: dict[str, str] = {}
    for a in sorted(authors):
        canonical.setdefault(a.lower(), a)
    users = set(users)
    graph = PeerGraph({u: set() for u in users})
    for p in posts:
        if p.user_id not in users:
            continue
        targets = list(p.mentions)
        if p.reply_to is not None:
            targets.append(p.reply_to)
        for t in targets:
            v = canonical.get(t.lower(), t.lower())
            if v == p.user_id:
                continue
            graph.edges[p.user_id].add(v)
            if v not in authors:
                graph.external.add(v)
    return graph
