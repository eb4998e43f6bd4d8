"""Reading receiver and detection tables and cutting a fish record into segments."""

from __future__ import annotations

import csv
import datetime as dt
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path

from .core import (
    GeoPoint,
    InputError,
    LocalProjection,
    ParseError,
    Receiver,
    SegmentSpec,
)

RECEIVER_HEADER = ("receiver_id", "lon", "lat")
DETECTION_HEADER = ("fish_id", "timestamp", "receiver_id")


@dataclass(frozen=True, slots=True)
class DetectionRecord:
    fish_id: str
    timestamp: dt.datetime  # tz-aware, UTC
    receiver_id: str


@dataclass(frozen=True, slots=True)
class DailyDetection:
    fish_id: str
    day_index: int
    receiver_id: str
    date: dt.date


def _read_rows(path, header: tuple[str, ...]):
    path = os.fspath(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError("file is empty, expected a header row", line=1, path=path) from None
        got = tuple(c.strip() for c in first)
        if got != header:
            raise ParseError(
                f"expected header {','.join(header)!r}, got {','.join(got)!r}", line=1, path=path
            )
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}",
                    line=reader.line_num,
                    path=path,
                )
            yield reader.line_num, [c.strip() for c in row]


def parse_receivers(
    path, radius_m: float = 500.0, projection: LocalProjection | None = None
) -> list[Receiver]:
    """Read a ``receiver_id,lon,lat`` CSV into planar receivers.

    When ``projection`` is omitted the plane is centered on the centroid of
    the receivers in the file.
    """
    entries: list[tuple[str, GeoPoint]] = []
    seen: set[str] = set()
    for line, (rid, lon, lat) in _read_rows(path, RECEIVER_HEADER):
        if not rid:
            raise ParseError("empty receiver_id", line=line, path=os.fspath(path))
        try:
            geo = GeoPoint(float(lon), float(lat))
        except ValueError as exc:
            raise ParseError(f"bad coordinates: {exc}", line=line, path=os.fspath(path)) from None
        if rid in seen:
            raise InputError(f"duplicate receiver id {rid!r} ({path}:{line})")
        seen.add(rid)
        entries.append((rid, geo))

    if not entries:
        return []
    if projection is None:
        projection = LocalProjection.centered_on(g for _, g in entries)
    return [Receiver(rid, projection.to_planar(g), radius_m, g) for rid, g in entries]


def projection_for(receivers: Iterable[Receiver]) -> LocalProjection:
    """The projection ``parse_receivers`` uses by default for this receiver set."""
    geos = [r.geo for r in receivers]
    if any(g is None for g in geos):
        raise InputError("receivers carry no geographic coordinates")
    return LocalProjection.centered_on(geos)


def _parse_timestamp(text: str) -> dt.datetime:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = dt.datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError("timestamp has no UTC offset")
    return ts.astimezone(dt.timezone.utc)


def parse_detections(path, receivers: Mapping[str, Receiver] | None = None) -> list[DetectionRecord]:
    """Read a ``fish_id,timestamp,receiver_id`` CSV.

    If ``receivers`` is given, every receiver id must resolve against it.
    """
    out = []
    for line, (fish, stamp, rid) in _read_rows(path, DETECTION_HEADER):
        if not fish:
            raise ParseError("empty fish_id", line=line, path=os.fspath(path))
        try:
            ts = _parse_timestamp(stamp)
        except ValueError as exc:
            raise ParseError(f"bad timestamp {stamp!r}: {exc}", line=line, path=os.fspath(path)) from None
        if receivers is not None and rid not in receivers:
            raise ParseError(f"unknown receiver id {rid!r}", line=line, path=os.fspath(path))
        out.append(DetectionRecord(fish, ts, rid))
    return out


def collapse_daily(detections: Iterable[DetectionRecord]) -> list[DailyDetection]:
    """Keep the last detection of each fish on each UTC calendar day.

    Timestamp ties within a day are broken by the larger receiver id so the
    result does not depend on input order.
    """
    ordered = sorted(
        detections,
        key=lambda d: (d.fish_id, d.timestamp.astimezone(dt.timezone.utc), d.receiver_id),
    )
    out: list[DailyDetection] = []
    for fish, recs in groupby(ordered, key=lambda d: d.fish_id):
        recs = list(recs)
        first_day = recs[0].timestamp.astimezone(dt.timezone.utc).date()
        for day, same_day in groupby(recs, key=lambda d: d.timestamp.astimezone(dt.timezone.utc).date()):
            last = list(same_day)[-1]
            out.append(DailyDetection(fish, (day - first_day).days + 1, last.receiver_id, day))
    return out


def daily_to_records(daily: Iterable[DailyDetection]) -> list[DetectionRecord]:
    """Midnight-UTC detection records equivalent to ``daily``."""
    return [
        DetectionRecord(
            d.fish_id,
            dt.datetime.combine(d.date, dt.time(0, 0), tzinfo=dt.timezone.utc),
            d.receiver_id,
        )
        for d in daily
    ]


def build_segments(
    daily: Iterable[DailyDetection], receivers: Mapping[str, Receiver]
) -> list[SegmentSpec]:
    """One segment per pair of consecutive detection days of a single fish."""
    daily = sorted(daily, key=lambda d: d.day_index)
    fish = {d.fish_id for d in daily}
    if len(fish) > 1:
        raise InputError(f"build_segments expects one fish, got {sorted(fish)}")
    if len(daily) < 2:
        return []
    specs = []
    for k, (a, b) in enumerate(zip(daily, daily[1:]), start=1):
        if b.day_index <= a.day_index:
            raise InputError(f"fish {a.fish_id!r}: duplicate day index {b.day_index}")
        try:
            start, end = receivers[a.receiver_id], receivers[b.receiver_id]
        except KeyError as exc:
            raise InputError(f"unknown receiver id {exc.args[0]!r}") from None
        specs.append(SegmentSpec(a.fish_id, k, start, end, b.day_index - a.day_index + 1))
    return specs


def segments_for_fish(
    detections: Iterable[DetectionRecord], receivers: Mapping[str, Receiver], fish_id: str
) -> list[SegmentSpec]:
    daily = [d for d in collapse_daily(detections) if d.fish_id == fish_id]
    if not daily:
        raise InputError(f"no detections for fish id {fish_id!r}")
    return build_segments(daily, receivers)


def write_receivers(path, rows: Iterable[tuple[str, float, float]]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECEIVER_HEADER)
        for rid, lon, lat in rows:
            w.writerow([rid, f"{lon:.9g}", f"{lat:.9g}"])
    return path


def write_detections(path, records: Iterable[DetectionRecord]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DETECTION_HEADER)
        for r in records:
            w.writerow([r.fish_id, r.timestamp.isoformat(), r.receiver_id])
    return path
