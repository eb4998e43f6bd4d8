"""Synthetic receiver array and detection logs with known segment structures.

Real detection logs are not bundled. The stand-in here places 48 receivers with
non-overlapping 500 m ranges over a Chesapeake-Bay-sized box and writes two
fish whose daily detections follow fixed day patterns: fish 18453 on
days 1, 5, 10, 12 (receivers 44, 31, 18, 13) and fish 18434 on days 1, 7, 18
(receivers 43, 29, 25).
"""

from __future__ import annotations

import datetime as dt
import math
from pathlib import Path

import numpy as np

from .core import GeoPoint, LocalProjection
from .ingest import DetectionRecord, write_detections, write_receivers

BOX = (-76.45, -75.95, 36.95, 37.65)  # lon_min, lon_max, lat_min, lat_max
N_RECEIVERS = 48
MIN_SEPARATION_M = 1500.0

UTC = dt.timezone.utc

# fish id -> (first day, [(day offset, receiver id), ...])
EXAMPLE_FISH = {
    "18453": (dt.date(2018, 9, 1), [(0, "44"), (4, "31"), (9, "18"), (11, "13")]),
    "18434": (dt.date(2017, 9, 23), [(0, "43"), (6, "29"), (17, "25")]),
}


def receiver_layout(seed: int = 2018, n: int = N_RECEIVERS) -> list[tuple[str, float, float]]:
    """``(id, lon, lat)`` for ``n`` receivers at least ``MIN_SEPARATION_M`` apart."""
    rng = np.random.default_rng(seed)
    lon0, lon1, lat0, lat1 = BOX
    proj = LocalProjection(GeoPoint((lon0 + lon1) / 2, (lat0 + lat1) / 2))
    placed: list[tuple[float, float, float, float]] = []
    while len(placed) < n:
        lon = rng.uniform(lon0, lon1)
        lat = rng.uniform(lat0, lat1)
        p = proj.to_planar(GeoPoint(lon, lat))
        if all(math.hypot(p.x - q[2], p.y - q[3]) >= MIN_SEPARATION_M for q in placed):
            placed.append((lon, lat, p.x, p.y))
    # number south to north so consecutive ids are roughly neighbours
    placed.sort(key=lambda q: (q[1], q[0]))
    return [(str(i + 1), round(lon, 6), round(lat, 6)) for i, (lon, lat, _, _) in enumerate(placed)]


def example_detections(noise_seed: int = 7) -> list[DetectionRecord]:
    """Raw detections for the two fish, with earlier same-day pings at other receivers.

    The extra pings exercise the keep-the-last-detection-of-the-day rule
    without changing the daily record.
    """
    rng = np.random.default_rng(noise_seed)
    out = []
    for fish, (day0, visits) in EXAMPLE_FISH.items():
        for offset, rid in visits:
            day = day0 + dt.timedelta(days=offset)
            hour = int(rng.integers(14, 22))
            final = dt.datetime.combine(day, dt.time(hour, int(rng.integers(0, 60))), tzinfo=UTC)
            decoy = str(int(rng.integers(1, N_RECEIVERS + 1)))
            out.append(DetectionRecord(fish, final - dt.timedelta(hours=6), decoy))
            out.append(DetectionRecord(fish, final, rid))
            out.append(DetectionRecord(fish, final - dt.timedelta(minutes=3), rid))
    out.sort(key=lambda r: r.timestamp)
    return out


def day_pattern(fish_id: str, days, receivers, start: dt.date = dt.date(2020, 6, 1)) -> list[DetectionRecord]:
    """One noon detection per listed day index (1-based)."""
    return [
        DetectionRecord(fish_id, dt.datetime.combine(start + dt.timedelta(days=d - 1), dt.time(12), tzinfo=UTC), r)
        for d, r in zip(days, receivers)
    ]


def write_example_data(directory, seed: int = 2018) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rec = write_receivers(directory / "receivers.csv", receiver_layout(seed))
    det = write_detections(directory / "detections.csv", example_detections())
    return rec, det
