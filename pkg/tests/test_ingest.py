import datetime as dt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from trackimpute.core import InputError, ParseError
from trackimpute.ingest import (
    DetectionRecord,
    build_segments,
    collapse_daily,
    daily_to_records,
    parse_detections,
    parse_receivers,
    segments_for_fish,
)
from trackimpute.synthetic import day_pattern, write_example_data

from conftest import grid_receivers, specs_for_days

UTC = dt.timezone.utc


@pytest.fixture
def example_dir(tmp_path):
    write_example_data(tmp_path)
    return tmp_path


def test_example_receivers_parse(example_dir):
    recs = parse_receivers(example_dir / "receivers.csv")
    assert len(recs) == 48
    assert len({r.id for r in recs}) == 48
    assert all(r.radius_m == 500.0 for r in recs)


def test_duplicate_receiver_id_is_named(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("receiver_id,lon,lat\n7,-76.1,37.1\n7,-76.2,37.2\n")
    with pytest.raises(InputError, match="'7'"):
        parse_receivers(p)


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("receiver_id,lon\n1,2\n", "header"),
        ("receiver_id,lon,lat\n1,abc,37\n", ":2"),
        ("", "empty"),
    ],
)
def test_bad_receiver_files(tmp_path, body, fragment):
    p = tmp_path / "r.csv"
    p.write_text(body)
    with pytest.raises(ParseError, match=fragment):
        parse_receivers(p)


def test_detection_timestamp_needs_offset(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("fish_id,timestamp,receiver_id\n1,2020-01-01T10:00:00,3\n")
    with pytest.raises(ParseError, match="offset"):
        parse_detections(p)


def test_detection_unknown_receiver(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("fish_id,timestamp,receiver_id\n1,2020-01-01T10:00:00Z,ZZ\n")
    with pytest.raises(ParseError, match="ZZ"):
        parse_detections(p, grid_receivers())


def test_collapse_keeps_last_of_day():
    day = dt.datetime(2020, 5, 1, tzinfo=UTC)
    recs = [
        DetectionRecord("f", day.replace(hour=20), "B"),
        DetectionRecord("f", day.replace(hour=3), "A"),
        DetectionRecord("f", day + dt.timedelta(days=2, hours=1), "C"),
    ]
    daily = collapse_daily(recs)
    assert [(d.day_index, d.receiver_id) for d in daily] == [(1, "B"), (3, "C")]


def test_collapse_uses_utc_day():
    east = dt.timezone(dt.timedelta(hours=5))
    recs = [
        DetectionRecord("f", dt.datetime(2020, 5, 2, 2, tzinfo=east), "A"),  # 2020-05-01 21:00Z
        DetectionRecord("f", dt.datetime(2020, 5, 1, 12, tzinfo=UTC), "B"),
    ]
    daily = collapse_daily(recs)
    assert [(d.date, d.receiver_id) for d in daily] == [(dt.date(2020, 5, 1), "A")]


def test_collapse_tie_is_order_independent():
    ts = dt.datetime(2020, 5, 1, 12, tzinfo=UTC)
    a = [DetectionRecord("f", ts, "A"), DetectionRecord("f", ts, "B")]
    assert collapse_daily(a) == collapse_daily(a[::-1])


def test_collapse_is_idempotent(example_dir):
    recs = parse_detections(example_dir / "detections.csv")
    once = collapse_daily(recs)
    assert collapse_daily(daily_to_records(once)) == once


@pytest.mark.parametrize(
    "days, Ts",
    [((1, 5, 10, 12), (5, 6, 3)), ((1, 7, 18), (7, 12)), ((1, 2), (2,))],
)
def test_segment_structure(days, Ts):
    specs = specs_for_days(days)
    assert len(specs) == len(days) - 1
    assert tuple(s.T for s in specs) == Ts
    assert [s.k for s in specs] == list(range(1, len(days)))
    for a, b in zip(specs, specs[1:]):
        assert a.end_receiver is b.start_receiver


@pytest.mark.parametrize("fish, Ts", [("18453", (5, 6, 3)), ("18434", (7, 12))])
def test_example_fish_structure(example_dir, fish, Ts):
    recs = {r.id: r for r in parse_receivers(example_dir / "receivers.csv")}
    dets = parse_detections(example_dir / "detections.csv", recs)
    specs = segments_for_fish(dets, recs, fish)
    assert tuple(s.T for s in specs) == Ts


@given(st.lists(st.integers(1, 400), min_size=2, max_size=12, unique=True))
def test_segment_lengths_cover_span(days):
    days = sorted(days)
    receivers = grid_receivers(len(days))
    specs = build_segments(collapse_daily(day_pattern("f", days, list(receivers))), receivers)
    assert sum(s.T - 1 for s in specs) == days[-1] - days[0]
    assert all(s.T >= 2 for s in specs)


def test_single_day_fish_has_no_segments():
    receivers = grid_receivers(1)
    assert build_segments(collapse_daily(day_pattern("f", [3], ["A"])), receivers) == []


def test_unknown_fish(example_dir):
    recs = {r.id: r for r in parse_receivers(example_dir / "receivers.csv")}
    dets = parse_detections(example_dir / "detections.csv", recs)
    with pytest.raises(InputError, match="no detections"):
        segments_for_fish(dets, recs, "99999")
