import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskvec.geo import GeoPoint
from riskvec.ingest import (
    PeerGraph,
    SelectionConfig,
    build_peer_graph,
    parse_posts,
    parse_timestamp,
    select_users,
    write_posts,
)
from riskvec.polygon import polygons_from_geometry
from riskvec.text import extract_hashtags, extract_mentions, tokenize


def rec(pid, user, ts="2012-10-29T10:00:00Z", lat=40.7, lon=-74.0, text="", reply_to=None):
    return json.dumps({"id": pid, "user": user, "ts": ts, "lat": lat, "lon": lon, "text": text,
                       "reply_to": reply_to})


def posts_of(*lines):
    posts, issues = parse_posts(lines)
    assert issues == []
    return posts


SQUARE = polygons_from_geometry(
    {"type": "Polygon", "coordinates": [[[-74.1, 40.6], [-73.9, 40.6], [-73.9, 40.8], [-74.1, 40.8], [-74.1, 40.6]]]},
    "area")


class TestParse:
    def test_hashtags_and_mentions(self):
        (p,) = posts_of(rec("1", "u", text="heading out #Sandy @nycem"))
        assert p.hashtags == ("sandy",)
        assert p.mentions == ("nycem",)

    def test_missing_coordinates(self):
        line = json.dumps({"id": "1", "user": "u", "ts": "2012-10-29T10:00:00Z", "text": "x"})
        (p,) = posts_of(line)
        assert p.location is None

    def test_malformed_line_reported(self):
        posts, issues = parse_posts([rec("1", "u"), "{not json", rec("3", "u")])
        assert [p.post_id for p in posts] == ["1", "3"]
        assert len(issues) == 1 and issues[0].line == 2

    @pytest.mark.parametrize("bad", [
        {"user": "u", "ts": "2012-10-29T10:00:00Z"},
        {"id": "1", "ts": "2012-10-29T10:00:00Z"},
        {"id": "1", "user": "u"},
        {"id": "1", "user": "u", "ts": "2012-10-29T10:00:00"},
        {"id": "1", "user": "u", "ts": "2012-10-29T10:00:00Z", "lat": 40.0, "lon": None},
        {"id": "1", "user": "u", "ts": "2012-10-29T10:00:00Z", "lat": 95.0, "lon": 0.0},
        {"id": "1", "user": "u", "ts": "2012-10-29T10:00:00Z", "lat": True, "lon": 0.0},
        [1, 2],
    ])
    def test_rejected_records(self, bad):
        posts, issues = parse_posts([json.dumps(bad)])
        assert posts == [] and len(issues) == 1

    def test_duplicate_ids(self):
        posts, issues = parse_posts([rec("1", "u"), rec("1", "v")])
        assert len(posts) == 1 and "duplicate" in issues[0].message

    def test_timestamp_normalized_to_utc_seconds(self):
        assert parse_timestamp("2012-10-28T10:30:00.75-04:00") == datetime(2012, 10, 28, 14, 30, tzinfo=timezone.utc)

    def test_write_round_trip(self):
        posts = posts_of(rec("1", "u", text="at home #sandy", reply_to="v"),
                         rec("2", "u", lat=None, lon=None, text="x"))
        again, issues = parse_posts(write_posts(posts).splitlines())
        assert again == posts and issues == []


class TestTokens:
    def test_case_and_punctuation(self):
        assert tokenize("Going home NOW!!") == ["going", "home", "now"]

    def test_hashtag_flag(self):
        toks = tokenize("#Sandy is here")
        assert toks == ["sandy", "is", "here"]
        assert [t.is_hashtag for t in toks] == [True, False, False]

    def test_urls_and_mentions_dropped(self):
        assert tokenize("see https://x.y @bob") == ["see"]

    def test_url_fragments_not_hashtags(self):
        assert extract_hashtags("http://a.b/#frag real #tag") == ["tag"]
        assert extract_mentions("mail me a@b.com or @Bob") == ["bob"]

    def test_unicode_words(self):
        assert tokenize("Café déjà-vu") == ["café", "déjà", "vu"]


class TestSelect:
    def test_single_place_excluded(self):
        posts = posts_of(*[rec(str(i), "u", text="at home") for i in range(5)])
        assert select_users(posts) == set()

    def test_no_keyword_excluded(self):
        posts = posts_of(rec("1", "u", text="hello"), rec("2", "u", lat=40.75, text="water everywhere"))
        assert select_users(posts) == set()

    def test_all_filters_pass(self):
        posts = posts_of(rec("1", "u", text="driving north"), rec("2", "u", lat=40.75, ts="2012-10-29T11:00:00Z"))
        assert select_users(posts, SelectionConfig(study_area=tuple(SQUARE))) == {"u"}

    def test_origin_outside_area(self):
        posts = posts_of(rec("1", "u", lat=41.5, text="driving north"), rec("2", "u", lat=40.75,
                                                                              ts="2012-10-29T11:00:00Z"))
        assert select_users(posts, SelectionConfig(study_area=tuple(SQUARE))) == set()

    def test_jitter_is_not_a_second_place(self):
        posts = posts_of(rec("1", "u", text="at home"), rec("2", "u", lat=40.700001))
        assert select_users(posts) == set()

    def test_time_window(self):
        posts = posts_of(rec("1", "u", text="at home"), rec("2", "u", lat=40.75, ts="2012-11-05T00:00:00Z"))
        window = (parse_timestamp("2012-10-28T14:30:00Z"), parse_timestamp("2012-11-01T00:00:00Z"))
        assert select_users(posts, SelectionConfig(time_window=window)) == set()
        assert select_users(posts) == {"u"}

    def test_min_locations_validated(self):
        with pytest.raises(Exception):
            SelectionConfig(min_distinct_locations=0)


class TestPeerGraph:
    def test_single_mention(self):
        g = build_peer_graph(posts_of(rec("1", "u", text="@v hello"), rec("2", "v")), {"u"})
        assert g.peers("u") == {"v"}

    def test_self_mention_ignored(self):
        g = build_peer_graph(posts_of(rec("1", "u", text="@u note to self")), {"u"})
        assert g.peers("u") == set()

    def test_reply_and_mention_once(self):
        g = build_peer_graph(posts_of(rec("1", "u", text="@v hi", reply_to="v"), rec("2", "v")), {"u"})
        assert g.peers("u") == {"v"} and g.out_degree("u") == 1

    def test_case_insensitive_and_external(self):
        g = build_peer_graph(posts_of(rec("1", "u", text="@Vee @ghost"), rec("2", "Vee")), {"u"})
        assert g.peers("u") == {"Vee", "ghost"}
        assert g.external == {"ghost"}
        assert PeerGraph.from_json(json.loads(json.dumps(g.to_json()))) == g


# ---------------------------------------------------------------- properties

users = st.sampled_from(["ann", "bob", "cy", "dee", "eve"])
words = st.sampled_from(["at", "go", "sandy", "drive", "home", "water", "storm", "hello", "@bob", "@ann",
                         "@zed", "#sandy", "driving"])
post_specs = st.lists(
    st.tuples(users, st.integers(0, 3), st.lists(words, max_size=5), st.booleans(), st.integers(0, 100)),
    min_size=1, max_size=25)


def build(specs):
    lines = []
    for i, (user, place, ws, geocoded, minute) in enumerate(specs):
        lat = 40.7 + place * 0.01 if geocoded else None
        lon = -74.0 if geocoded else None
        lines.append(rec(str(i), user, ts=f"2012-10-29T10:{minute % 60:02d}:00Z", lat=lat, lon=lon,
                         text=" ".join(ws)))
    return posts_of(*lines)


@settings(max_examples=150)
@given(post_specs, st.sampled_from(["hello", "home", "water", "storm"]))
def test_keywords_monotone(specs, extra):
    posts = build(specs)
    base = SelectionConfig(keywords=("at", "go"))
    more = SelectionConfig(keywords=("at", "go", extra))
    assert select_users(posts, base) <= select_users(posts, more)


@settings(max_examples=150)
@given(post_specs, st.randoms(use_true_random=False))
def test_order_independent(specs, rnd):
    posts = build(specs)
    shuffled = list(posts)
    rnd.shuffle(shuffled)
    cfg = SelectionConfig(study_area=tuple(SQUARE))
    sel = select_users(posts, cfg)
    assert select_users(shuffled, cfg) == sel
    assert build_peer_graph(posts, sel) == build_peer_graph(shuffled, sel)


@settings(max_examples=150)
@given(post_specs)
def test_graph_endpoints_known(specs):
    posts = build(specs)
    authors = {p.user_id for p in posts}
    sel = select_users(posts)
    g = build_peer_graph(posts, sel)
    for u, vs in g.edges.items():
        assert u in authors and u not in vs
        for v in vs:
            assert v in authors or v in g.external
