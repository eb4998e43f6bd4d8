"""Directed random walk between two detections.

A segment starts and ends at Gaussian draws around the detecting receivers.
Each unobserved day steps from the previous position toward the end point
with a Normal step length that targets an even share of the remaining
distance, and a heading perturbed by Normal angular noise whose variance
either decays exponentially (short gaps) or is redrawn uniformly (long gaps).
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .core import (
    ModelParams,
    PlanarPoint,
    Receiver,
    SegmentDraw,
    SegmentSpec,
    StepLatents,
    TrajectoryDraw,
    angle_to,
    distance,
)

logger = logging.getLogger(__name__)

MAX_STEP_RETRIES = 1000
MIN_ENDPOINT_ACCEPTANCE = 1e-6


class RemainingDistanceMode(enum.Enum):
    """How the remaining distance ``d`` is computed at each step.

    ``LITERAL`` evaluates ``max(a - 2r, a)`` as written, which is just ``a``,
    the distance to the end point. ``ADJUSTED`` subtracts both detection
    radii, ``max(a - 2r, eps_d)``.
    """

    LITERAL = "literal"
    ADJUSTED = "adjusted"


@dataclass(frozen=True, slots=True)
class Floors:
    """Numerical guards for degenerate configurations.

    eps_d:
        Smallest remaining distance (m).
    eps_v:
        Smallest step-length variance (m^2).
    max_var:
        Largest step-length variance (m^2); ``d**phi`` overflows for the
        heavy upper tail of wide ``phi`` priors.
    eps_D:
        Smallest ``|D|`` used in the step density (m).
    eps_psi:
        Smallest angular variance used in the step density (rad^2).
    """

    eps_d: float = 1.0
    eps_v: float = 1e-6
    max_var: float = 1e12
    eps_D: float = 1e-3
    eps_psi: float = 1e-12


DEFAULT_FLOORS = Floors()


def sample_endpoint(
    receiver: Receiver, sigma_r_sq: float, rng: np.random.Generator, enforce: bool = False
) -> PlanarPoint:
    """Isotropic bivariate Normal draw around ``receiver``.

    With ``enforce`` the draw is rejected until it falls within the
    receiver's detection radius.
    """
    if sigma_r_sq < 0:
        raise ValueError(f"sigma_r_sq must be >= 0, got {sigma_r_sq}")
    cx, cy = receiver.position.x, receiver.position.y
    if sigma_r_sq == 0:
        return PlanarPoint(cx, cy)
    sd = math.sqrt(sigma_r_sq)
    if not enforce:
        dx, dy = rng.normal(0.0, sd, size=2).tolist()
        return PlanarPoint(cx + dx, cy + dy)

    # P(|N_2(0, s^2 I)| <= r) = 1 - exp(-r^2 / 2s^2)
    accept = -math.expm1(-receiver.radius_m**2 / (2.0 * sigma_r_sq))
    if accept < MIN_ENDPOINT_ACCEPTANCE:
        raise ValueError(
            f"endpoint acceptance probability {accept:.3g} too small for "
            f"sigma_r={sd:.6g} m and radius {receiver.radius_m} m"
        )
    r2 = receiver.radius_m**2
    while True:
        dx, dy = rng.normal(0.0, sd, size=2).tolist()
        if dx * dx + dy * dy <= r2:
            return PlanarPoint(cx + dx, cy + dy)


def remaining_distance(
    x_prev: PlanarPoint,
    x_star: PlanarPoint,
    r: float,
    mode: RemainingDistanceMode = RemainingDistanceMode.LITERAL,
    eps_d: float = DEFAULT_FLOORS.eps_d,
) -> float:
    a = distance(x_prev, x_star)
    if mode is RemainingDistanceMode.LITERAL:
        return max(a - 2.0 * r, a, eps_d)
    return max(a - 2.0 * r, eps_d)


def sigma_psi_sq(t: int, n: int, params: ModelParams, rng: np.random.Generator) -> float:
    """Angular-noise variance for step ``t`` of a gap with ``n`` unobserved days."""
    if n <= params.beta:
        return params.gamma * math.exp(params.alpha * (n - (t - 1)))
    return params.gamma * float(rng.uniform(0.0, 1.0))


def step_variance(d: float, phi: float, floors: Floors = DEFAULT_FLOORS) -> float:
    """Variance ``d**phi`` of the step-length draw, clipped to ``[eps_v, max_var]``."""
    if d <= 0:
        return floors.eps_v
    log_v = phi * math.log(d)
    if log_v >= math.log(floors.max_var):
        return floors.max_var
    return max(math.exp(log_v), floors.eps_v)


def step_mean(d: float, t: int, T: int) -> float:
    return d / (T - (t - 1))


def advance(x_prev: PlanarPoint, dist_draw: float, theta: float, psi: float) -> PlanarPoint:
    """Move ``|dist_draw|`` from ``x_prev`` along heading ``theta + psi``."""
    step = abs(dist_draw)
    heading = theta + psi
    return PlanarPoint(x_prev.x + step * math.cos(heading), x_prev.y + step * math.sin(heading))


def sample_step(
    x_prev: PlanarPoint,
    x_star: PlanarPoint,
    t: int,
    T: int,
    params: ModelParams,
    mode: RemainingDistanceMode,
    rng: np.random.Generator,
    floors: Floors = DEFAULT_FLOORS,
) -> tuple[PlanarPoint, StepLatents]:
    if not 2 <= t <= T - 1:
        raise ValueError(f"step index t={t} outside 2..{T - 1}")
    coincident = x_prev == x_star
    theta = angle_to(x_prev, x_star)
    d = remaining_distance(x_prev, x_star, params.r_m, mode, floors.eps_d)
    s2 = sigma_psi_sq(t, T - 2, params, rng)
    D = float(rng.normal(step_mean(d, t, T), math.sqrt(step_variance(d, params.phi, floors))))
    psi = float(rng.normal(0.0, math.sqrt(s2))) if s2 > 0 else 0.0
    lat = StepLatents(t, theta, psi, d, D, s2, coincident)
    return advance(x_prev, D, theta, psi), lat


def _inside_any(p: PlanarPoint, receivers: Sequence[Receiver]) -> bool:
    return any(distance(p, r.position) <= r.radius_m for r in receivers)


def impute_segment(
    spec: SegmentSpec,
    params: ModelParams,
    mode: RemainingDistanceMode,
    rng: np.random.Generator,
    *,
    floors: Floors = DEFAULT_FLOORS,
    start: PlanarPoint | None = None,
    enforce_endpoints: bool = False,
    avoid: Sequence[Receiver] | None = None,
) -> SegmentDraw:
    """Simulate one segment.

    Parameters
    ----------
    spec : SegmentSpec
        Receivers and length of the gap.
    params : ModelParams
        Movement parameters for this draw.
    mode : RemainingDistanceMode
        Remaining-distance convention.
    rng : numpy.random.Generator
        Source of all randomness; consumed in a fixed order.
    floors : Floors, optional
        Numerical guards.
    start : PlanarPoint, optional
        Reuse this start position (the previous segment's end) instead of
        drawing one around ``spec.start_receiver``.
    enforce_endpoints : bool, optional
        Reject endpoint draws outside the receiver radius.
    avoid : sequence of Receiver, optional
        If given, interior steps landing inside any of these receivers'
        ranges are redrawn, up to ``MAX_STEP_RETRIES`` times per step.

    Returns
    -------
    SegmentDraw
    """
    if start is None:
        start = sample_endpoint(spec.start_receiver, params.sigma_r_sq, rng, enforce_endpoints)
    x_star = sample_endpoint(spec.end_receiver, params.sigma_r_sq, rng, enforce_endpoints)

    positions = [start]
    latents = []
    x = start
    for t in range(2, spec.T):
        x_new, lat = sample_step(x, x_star, t, spec.T, params, mode, rng, floors)
        if avoid:
            tries = 1
            while _inside_any(x_new, avoid) and tries < MAX_STEP_RETRIES:
                x_new, lat = sample_step(x, x_star, t, spec.T, params, mode, rng, floors)
                tries += 1
            if tries == MAX_STEP_RETRIES and _inside_any(x_new, avoid):
                logger.warning(
                    "fish %s segment %d step %d: still inside a receiver range after %d retries",
                    spec.fish_id, spec.k, t, MAX_STEP_RETRIES,
                )
        positions.append(x_new)
        latents.append(lat)
        x = x_new
    positions.append(x_star)
    return SegmentDraw(spec, tuple(positions), tuple(latents))


def impute_trajectory(
    specs: Sequence[SegmentSpec],
    params: ModelParams,
    mode: RemainingDistanceMode,
    rng: np.random.Generator,
    *,
    floors: Floors = DEFAULT_FLOORS,
    enforce_endpoints: bool = False,
    avoid: Sequence[Receiver] | None = None,
    draw_id: int = 0,
) -> TrajectoryDraw:
    """Chain segments so each one starts at the previous segment's end point."""
    if not specs:
        raise ValueError("cannot impute a trajectory with no segments")
    segments = []
    start = None
    for spec in sorted(specs, key=lambda s: s.k):
        seg = impute_segment(
            spec, params, mode, rng,
            floors=floors, start=start, enforce_endpoints=enforce_endpoints, avoid=avoid,
        )
        segments.append(seg)
        start = seg.end
    return TrajectoryDraw(tuple(segments), params, draw_id=draw_id)


def replay_positions(draw: SegmentDraw) -> list[PlanarPoint]:
    """Rebuild interior positions from the start point and stored latents."""
    out = [draw.positions[0]]
    for lat in draw.latents:
        out.append(advance(out[-1], lat.dist_draw, lat.theta, lat.psi))
    out.append(draw.positions[-1])
    return out
