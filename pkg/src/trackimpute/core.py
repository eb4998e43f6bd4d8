"""Value types and local planar geometry shared across the engine.

Everything downstream works in meters on a local equirectangular plane
anchored at a fixed origin (normally the centroid of the receiver array).
All types are frozen so draws can be shipped between worker processes
without defensive copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

METERS_PER_DEGREE = 111_320.0


class TrackImputeError(Exception):
    """Base class for engine errors."""


class InputError(TrackImputeError, ValueError):
    """Bad user-supplied data (files, ids, configuration)."""


class ParseError(InputError):
    """A file row could not be parsed."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True, slots=True)
class GeoPoint:
    lon: float
    lat: float

    def __post_init__(self):
        if not (-180.0 <= self.lon <= 180.0) or not (-90.0 <= self.lat <= 90.0):
            raise InputError(f"coordinate out of range: lon={self.lon}, lat={self.lat}")


@dataclass(frozen=True, slots=True)
class PlanarPoint:
    """Meters east (``x``) and north (``y``) of the projection origin."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite planar point ({self.x}, {self.y})")


@dataclass(frozen=True, slots=True)
class Receiver:
    id: str
    position: PlanarPoint
    radius_m: float = 500.0
    geo: GeoPoint | None = None

    def __post_init__(self):
        if not self.radius_m > 0:
            raise InputError(f"receiver {self.id!r}: radius must be positive, got {self.radius_m}")


@dataclass(frozen=True, slots=True)
class ModelParams:
    """One realization of the movement-model parameters.

    ``alpha`` is the exponential decay rate of the angular-noise variance,
    ``beta`` the gap-length threshold of the variance regime switch,
    ``gamma`` the initial angular-noise variance (rad^2), ``phi`` the power
    of the step-length variance ``d**phi``, ``sigma_r_sq`` the isotropic
    endpoint variance (m^2) and ``r_m`` the detection radius.
    """

    alpha: float
    beta: int
    gamma: float
    phi: float
    sigma_r_sq: float
    r_m: float = 500.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError(f"alpha must be > 0, got {self.alpha}")
        if not self.gamma > 0:
            raise InputError(f"gamma must be > 0, got {self.gamma}")
        if not self.sigma_r_sq > 0:
            raise InputError(f"sigma_r_sq must be > 0, got {self.sigma_r_sq}")
        if not self.r_m > 0:
            raise InputError(f"r_m must be > 0, got {self.r_m}")
        if int(self.beta) != self.beta or self.beta < 0:
            raise InputError(f"beta must be a nonnegative integer, got {self.beta}")
        if not math.isfinite(self.phi):
            raise InputError(f"phi must be finite, got {self.phi}")


@dataclass(frozen=True, slots=True)
class SegmentSpec:
    """The gap between two consecutive daily detections of one fish.

    Day ``t=1`` is the start detection, ``t=T`` the end detection, and the
    ``n = T - 2`` days in between are imputed.
    """

    fish_id: str
    k: int
    start_receiver: Receiver
    end_receiver: Receiver
    T: int

    def __post_init__(self):
        if self.T < 2:
            raise InputError(f"segment length T must be >= 2, got {self.T}")

    @property
    def n(self) -> int:
        return self.T - 2


@dataclass(frozen=True, slots=True)
class StepLatents:
    """Everything drawn or derived while producing position ``t``.

    ``dist_draw`` keeps the signed Normal draw; the step itself uses its
    absolute value. ``coincident`` marks steps taken from the target point
    itself, where the heading is undefined and set to 0.
    """

    t: int
    theta: float
    psi: float
    d_remaining: float
    dist_draw: float
    sigma_psi_sq: float
    coincident: bool = False


@dataclass(frozen=True, slots=True)
class SegmentDraw:
    spec: SegmentSpec
    positions: tuple[PlanarPoint, ...]
    latents: tuple[StepLatents, ...]

    def __post_init__(self):
        if len(self.positions) != self.spec.T:
            raise ValueError(f"expected {self.spec.T} positions, got {len(self.positions)}")
        if len(self.latents) != self.spec.T - 2:
            raise ValueError(f"expected {self.spec.T - 2} latents, got {len(self.latents)}")

    @property
    def start(self) -> PlanarPoint:
        return self.positions[0]

    @property
    def end(self) -> PlanarPoint:
        return self.positions[-1]


@dataclass(frozen=True, slots=True)
class TrajectoryDraw:
    segments: tuple[SegmentDraw, ...]
    params: ModelParams
    loglik: float = float("nan")
    draw_id: int = 0

    def check_chaining(self) -> None:
        """Raise if any segment does not start exactly where the previous one ended."""
        for prev, seg in zip(self.segments, self.segments[1:]):
            if seg.start != prev.end:
                raise ValueError(
                    f"segment {seg.spec.k} does not start where segment {prev.spec.k} ends"
                )

    @property
    def n_days(self) -> int:
        return 1 + sum(s.spec.T - 1 for s in self.segments)


@dataclass(frozen=True, slots=True)
class LocalProjection:
    """Equirectangular projection about ``origin`` on a spherical Earth."""

    origin: GeoPoint

    @classmethod
    def centered_on(cls, points) -> "LocalProjection":
        points = list(points)
        if not points:
            raise InputError("cannot center a projection on an empty point set")
        lon = math.fsum(p.lon for p in points) / len(points)
        lat = math.fsum(p.lat for p in points) / len(points)
        return cls(GeoPoint(lon, lat))

    def to_planar(self, p: GeoPoint) -> PlanarPoint:
        return to_planar(p, self.origin)

    def to_geo(self, q: PlanarPoint) -> GeoPoint:
        return to_geo(q, self.origin)


def to_planar(p: GeoPoint, origin: GeoPoint) -> PlanarPoint:
    coslat = math.cos(math.radians(origin.lat))
    return PlanarPoint(
        (p.lon - origin.lon) * coslat * METERS_PER_DEGREE,
        (p.lat - origin.lat) * METERS_PER_DEGREE,
    )


def to_geo(q: PlanarPoint, origin: GeoPoint) -> GeoPoint:
    coslat = math.cos(math.radians(origin.lat))
    return GeoPoint(
        origin.lon + q.x / (coslat * METERS_PER_DEGREE),
        origin.lat + q.y / METERS_PER_DEGREE,
    )


def distance(p: PlanarPoint, q: PlanarPoint) -> float:
    return math.hypot(q.x - p.x, q.y - p.y)


def angle_to(src: PlanarPoint, dst: PlanarPoint) -> float:
    """Heading from ``src`` to ``dst`` in (-pi, pi]; 0 when the points coincide."""
    dx = dst.x - src.x
    dy = dst.y - src.y
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return math.atan2(dy, dx)
