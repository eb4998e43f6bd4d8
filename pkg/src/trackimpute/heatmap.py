"""Occupancy rasters over retained draws, and the trajectory/heatmap file formats."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    InputError,
    LocalProjection,
    ParseError,
    PlanarPoint,
    TrajectoryDraw,
)

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ("draw_id", "segment_k", "t", "x_m", "y_m", "lon", "lat", "loglik")
PGM_MAXVAL = 65535


@dataclass(frozen=True)
class HeatmapGrid:
    """Counts on a regular grid; ``counts[row, col]`` with row 0 at the south edge."""

    origin: PlanarPoint
    cell_m: float
    ncols: int
    nrows: int
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != (self.nrows, self.ncols):
            raise ValueError(f"counts shape {self.counts.shape} != ({self.nrows}, {self.ncols})")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cell_of(self, p: PlanarPoint) -> tuple[int, int]:
        return (
            math.floor((p.y - self.origin.y) / self.cell_m),
            math.floor((p.x - self.origin.x) / self.cell_m),
        )

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin.x, self.origin.y
        return (x0, x0 + self.ncols * self.cell_m, y0, y0 + self.nrows * self.cell_m)


def draw_points(draw: TrajectoryDraw, include_endpoints: bool = True) -> list[PlanarPoint]:
    """All positions of every segment; shared boundary points appear once per segment."""
    pts = []
    for seg in draw.segments:
        pts.extend(seg.positions if include_endpoints else seg.positions[1:-1])
    return pts


def build_heatmap(
    draws: Sequence[TrajectoryDraw],
    cell_m: float,
    padding_m: float = 0.0,
    include_endpoints: bool = True,
    max_cells: int | None = None,
) -> HeatmapGrid:
    """Count every position of every draw into square cells of side ``cell_m``.

    The grid covers the bounding box of all positions grown by ``padding_m``.
    With ``max_cells`` set, ``cell_m`` is doubled until the grid fits (see
    :func:`fit_cell_size`).
    """
    if not draws:
        raise ValueError("cannot build a heatmap from no draws")
    pts = [p for d in draws for p in draw_points(d, include_endpoints)]
    bound = pts or [p for d in draws for p in draw_points(d, True)]
    return grid_from_points(pts, cell_m, padding_m, bound, max_cells)


def grid_from_points(
    points: Sequence[PlanarPoint],
    cell_m: float,
    padding_m: float = 0.0,
    bound: Sequence[PlanarPoint] | None = None,
    max_cells: int | None = None,
) -> HeatmapGrid:
    """Bin ``points`` on a grid covering ``bound`` (default: the points) plus padding."""
    if not cell_m > 0:
        raise ValueError(f"cell_m must be > 0, got {cell_m}")
    if padding_m < 0:
        raise ValueError(f"padding_m must be >= 0, got {padding_m}")
    bound = points if bound is None else bound
    if not bound:
        raise ValueError("cannot size a grid with no points")
    xs = np.array([p.x for p in bound])
    ys = np.array([p.y for p in bound])
    x0 = float(xs.min()) - padding_m
    y0 = float(ys.min()) - padding_m
    width = float(xs.max()) + padding_m - x0
    height = float(ys.max()) + padding_m - y0
    if max_cells is not None:
        cell_m = fit_cell_size(width, height, cell_m, max_cells)
    ncols = math.floor(width / cell_m) + 1
    nrows = math.floor(height / cell_m) + 1

    counts = np.zeros((nrows, ncols), dtype=np.int64)
    if len(points):
        px = np.array([p.x for p in points])
        py = np.array([p.y for p in points])
        # floor puts points on a cell edge into the higher-index cell
        cols = np.floor((px - x0) / cell_m).astype(np.int64)
        rows = np.floor((py - y0) / cell_m).astype(np.int64)
        np.clip(cols, 0, ncols - 1, out=cols)
        np.clip(rows, 0, nrows - 1, out=rows)
        np.add.at(counts, (rows, cols), 1)
    return HeatmapGrid(PlanarPoint(x0, y0), float(cell_m), ncols, nrows, counts)


def fit_cell_size(width: float, height: float, cell_m: float, max_cells: int) -> float:
    """Smallest ``cell_m * 2**k`` whose grid over ``width`` x ``height`` has at most ``max_cells`` cells."""
    if max_cells < 1:
        raise ValueError(f"max_cells must be >= 1, got {max_cells}")
    cell = cell_m
    while (math.floor(width / cell) + 1) * (math.floor(height / cell) + 1) > max_cells:
        cell *= 2.0
    if cell != cell_m:
        logger.warning(
            "heatmap of %.0f x %.0f m needs more than %d cells at %g m; using %g m cells",
            width, height, max_cells, cell_m, cell,
        )
    return cell


def _g9(v: float) -> str:
    return f"{v:.9g}"


def trajectory_rows(draw: TrajectoryDraw):
    """``(segment_k, t, point)`` for every day, shared boundary days under the later segment."""
    last = len(draw.segments) - 1
    for i, seg in enumerate(draw.segments):
        stop = seg.spec.T if i == last else seg.spec.T - 1
        for t in range(1, stop + 1):
            yield seg.spec.k, t, seg.positions[t - 1]


def export_trajectories(
    draws: Iterable[TrajectoryDraw], path, projection: LocalProjection | None = None
) -> Path:
    """Write one CSV row per day per draw.

    Planar coordinates are written at full round-trip precision; lon/lat and
    log-likelihood at 9 significant digits.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for d in draws:
            for k, t, p in trajectory_rows(d):
                if projection is not None:
                    g = projection.to_geo(p)
                    lon, lat = _g9(g.lon), _g9(g.lat)
                else:
                    lon = lat = ""
                w.writerow([d.draw_id, k, t, repr(float(p.x)), repr(float(p.y)), lon, lat, _g9(d.loglik)])
    return path


@dataclass(frozen=True)
class TrajectoryTable:
    """Positions read back from a trajectory CSV, grouped by draw then segment."""

    draws: dict[int, dict[int, list[tuple[int, PlanarPoint]]]]
    logliks: dict[int, float]

    def segment_positions(self, draw_id: int) -> list[list[PlanarPoint]]:
        """Per-segment position lists, re-attaching each shared boundary day to the earlier segment."""
        segs = self.draws[draw_id]
        ks = sorted(segs)
        out = []
        for j, k in enumerate(ks):
            pts = [p for _, p in sorted(segs[k], key=lambda tp: tp[0])]
            if j + 1 < len(ks):
                pts.append(min(segs[ks[j + 1]], key=lambda tp: tp[0])[1])
            out.append(pts)
        return out

    def points(self, include_endpoints: bool = True) -> list[PlanarPoint]:
        """Same point multiset :func:`draw_points` yields for the original draws."""
        pts = []
        for draw_id in sorted(self.draws):
            for seg in self.segment_positions(draw_id):
                pts.extend(seg if include_endpoints else seg[1:-1])
        return pts


def heatmap_from_table(
    table: TrajectoryTable,
    cell_m: float,
    padding_m: float = 0.0,
    include_endpoints: bool = True,
    max_cells: int | None = None,
) -> HeatmapGrid:
    if not table.draws:
        raise ValueError("cannot build a heatmap from no draws")
    pts = table.points(include_endpoints)
    bound = pts or table.points(True)
    return grid_from_points(pts, cell_m, padding_m, bound, max_cells)


def read_trajectories(path) -> TrajectoryTable:
    path = Path(path)
    draws: dict[int, dict[int, list]] = defaultdict(lambda: defaultdict(list))
    logliks: dict[int, float] = {}
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRAJECTORY_HEADER:
            raise ParseError(f"expected header {','.join(TRAJECTORY_HEADER)!r}", line=1, path=str(path))
        for row in reader:
            if not row:
                continue
            if len(row) != len(TRAJECTORY_HEADER):
                raise ParseError(f"expected {len(TRAJECTORY_HEADER)} fields, got {len(row)}",
                                 line=reader.line_num, path=str(path))
            try:
                draw_id, k, t = int(row[0]), int(row[1]), int(row[2])
                p = PlanarPoint(float(row[3]), float(row[4]))
                ll = float(row[7])
            except ValueError as exc:
                raise ParseError(str(exc), line=reader.line_num, path=str(path)) from None
            draws[draw_id][k].append((t, p))
            logliks[draw_id] = ll
    return TrajectoryTable({d: dict(s) for d, s in draws.items()}, logliks)


def export_heatmap(grid: HeatmapGrid, path, format: str = "csv") -> Path:
    """Write ``grid`` as long-form CSV (``row,col,count``) or 16-bit binary PGM.

    PGM rows run north to south; counts above 65535 are clamped.
    """
    path = Path(path)
    fmt = format.lower()
    if fmt == "csv":
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("row", "col", "count"))
            for r in range(grid.nrows):
                for c in range(grid.ncols):
                    w.writerow((r, c, int(grid.counts[r, c])))
    elif fmt == "pgm":
        img = np.clip(grid.counts[::-1], 0, PGM_MAXVAL).astype(">u2")
        header = f"P5\n{grid.ncols} {grid.nrows}\n{PGM_MAXVAL}\n".encode("ascii")
        path.write_bytes(header + img.tobytes())
    else:
        raise ValueError(f"unknown heatmap format {format!r}; expected 'csv' or 'pgm'")
    return path


def read_pgm(path) -> np.ndarray:
    """Counts from a 16-bit PGM written by :func:`export_heatmap`, north row first."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = map(int, parts[1].split())
    maxval = int(parts[2])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[3], dtype=dtype).reshape(h, w).astype(np.int64)


def write_grid_metadata(grid: HeatmapGrid, path, projection: LocalProjection | None = None) -> Path:
    """Sidecar JSON with the grid geometry needed to place the raster on a map."""
    meta = {
        "origin_x_m": grid.origin.x,
        "origin_y_m": grid.origin.y,
        "cell_m": grid.cell_m,
        "ncols": grid.ncols,
        "nrows": grid.nrows,
        "total": grid.total,
    }
    if projection is not None:
        meta["projection_origin_lon"] = projection.origin.lon
        meta["projection_origin_lat"] = projection.origin.lat
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path
