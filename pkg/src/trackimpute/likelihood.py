"""Approximate joint log-density of simulated trajectories.

Per segment the density factors into the endpoint term, and for each
interior day a step term (bivariate Normal from a second-order Taylor
expansion of the unit heading vector) times a step-length term. Remaining
distance and heading are deterministic given the previous position and the
end point, so they contribute no factor. Angular variances drawn uniformly
in the long-gap regime are conditioned on (unit density).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .core import ModelParams, PlanarPoint, Receiver, SegmentDraw, TrajectoryDraw, angle_to
from .movement import DEFAULT_FLOORS, Floors, replay_positions, step_mean, step_variance

LOG_2PI = math.log(2.0 * math.pi)
TAYLOR_VALIDITY_CAP = 1.0


class TaylorValidityWarning(UserWarning):
    """Angular variance too large for the Taylor step density to be accurate."""


class InconsistentDrawError(ValueError):
    """A draw's stored latents do not reproduce its positions."""


@dataclass(frozen=True)
class TaylorMoments:
    mu_z: np.ndarray
    sigma_z: np.ndarray


def taylor_moments(theta: float, sigma_psi_sq: float) -> TaylorMoments:
    """Approximate mean and covariance of ``(cos, sin)`` of ``theta + psi``.

    ``psi ~ N(0, sigma_psi_sq)``; both moments come from a second-order
    expansion about ``theta``.
    """
    s = sigma_psi_sq
    c, si = math.cos(theta), math.sin(theta)
    mu = (1.0 - 0.5 * s) * np.array([c, si])
    off = -si * c + 0.5 * si * c * s
    cov = s * np.array(
        [
            [si * si + 0.5 * c * c * s, off],
            [off, c * c + 0.5 * si * si * s],
        ]
    )
    return TaylorMoments(mu, cov)


def sigma_z_det(sigma_psi_sq: float) -> float:
    """Closed-form determinant of the Taylor covariance; independent of the heading."""
    return sigma_psi_sq**3 / 2.0


def logp0(
    x1: PlanarPoint, xT: PlanarPoint, r1: Receiver, rT: Receiver, sigma_r_sq: float
) -> float:
    """Log-density of the two segment endpoints around their receivers."""
    if not sigma_r_sq > 0:
        raise ValueError(f"sigma_r_sq must be > 0, got {sigma_r_sq}")
    q = (
        (x1.x - r1.position.x) ** 2
        + (x1.y - r1.position.y) ** 2
        + (xT.x - rT.position.x) ** 2
        + (xT.y - rT.position.y) ** 2
    )
    return -2.0 * math.log(2.0 * math.pi * sigma_r_sq) - q / (2.0 * sigma_r_sq)


def logp1(
    x_t: PlanarPoint,
    x_prev: PlanarPoint,
    D: float,
    theta: float,
    sigma_psi_sq: float,
    floors: Floors = DEFAULT_FLOORS,
) -> float:
    """Log-density of one interior position given the previous one.

    Normal with mean ``x_prev + |D| mu_z`` and covariance ``D**2 sigma_z``.
    """
    D = max(abs(D), floors.eps_D)
    s = max(sigma_psi_sq, floors.eps_psi)
    if s > TAYLOR_VALIDITY_CAP:
        warnings.warn(
            f"angular variance above {TAYLOR_VALIDITY_CAP}; Taylor step density is rough",
            TaylorValidityWarning,
            stacklevel=2,
        )
    c, si = math.cos(theta), math.sin(theta)
    shrink = D * (1.0 - 0.5 * s)
    rx = x_t.x - x_prev.x - shrink * c
    ry = x_t.y - x_prev.y - shrink * si
    # sigma_z = (s^2/2) u u' + s v v' with u = (c, si), v = (-si, c);
    # projecting onto u, v avoids the cancellation in the 2x2 inverse
    along = rx * c + ry * si
    across = -rx * si + ry * c
    quad = (along * along / (0.5 * s * s) + across * across / s) / (D * D)
    log_det = 4.0 * math.log(D) + math.log(sigma_z_det(s))
    return -LOG_2PI - 0.5 * log_det - 0.5 * quad


def logp2(D: float, d: float, t: int, T: int, phi: float, floors: Floors = DEFAULT_FLOORS) -> float:
    """Normal log-density of the signed step-length draw."""
    var = step_variance(d, phi, floors)
    z = D - step_mean(d, t, T)
    return -0.5 * (LOG_2PI + math.log(var)) - z * z / (2.0 * var)


def check_segment(draw: SegmentDraw, rel_tol: float = 1e-12, abs_tol: float = 1e-9) -> None:
    """Raise :class:`InconsistentDrawError` unless the latents replay to the stored positions."""
    ts = [lat.t for lat in draw.latents]
    if ts != list(range(2, draw.spec.T)):
        raise InconsistentDrawError(f"segment {draw.spec.k}: latent steps {ts} out of order")
    for got, want in zip(replay_positions(draw), draw.positions):
        if not (
            math.isclose(got.x, want.x, rel_tol=rel_tol, abs_tol=abs_tol)
            and math.isclose(got.y, want.y, rel_tol=rel_tol, abs_tol=abs_tol)
        ):
            raise InconsistentDrawError(
                f"segment {draw.spec.k}: replayed position ({got.x}, {got.y}) "
                f"differs from stored ({want.x}, {want.y})"
            )
    x_star = draw.end
    for prev, lat in zip(draw.positions, draw.latents):
        if not math.isclose(angle_to(prev, x_star), lat.theta, rel_tol=0, abs_tol=1e-12):
            raise InconsistentDrawError(
                f"segment {draw.spec.k} step {lat.t}: stored heading does not point at the end point"
            )


def segment_loglik(
    draw: SegmentDraw, params: ModelParams, floors: Floors = DEFAULT_FLOORS, check: bool = True
) -> float:
    if check:
        check_segment(draw)
    spec = draw.spec
    total = logp0(draw.start, draw.end, spec.start_receiver, spec.end_receiver, params.sigma_r_sq)
    for prev, cur, lat in zip(draw.positions, draw.positions[1:], draw.latents):
        total += logp1(cur, prev, lat.dist_draw, lat.theta, lat.sigma_psi_sq, floors)
        total += logp2(lat.dist_draw, lat.d_remaining, lat.t, spec.T, params.phi, floors)
    return total


def trajectory_loglik(
    draw: TrajectoryDraw,
    params: ModelParams | None = None,
    floors: Floors = DEFAULT_FLOORS,
    check: bool = True,
) -> float:
    """Sum of segment log-likelihoods; ``params`` defaults to the draw's own."""
    draw.check_chaining()
    params = draw.params if params is None else params
    return math.fsum(segment_loglik(seg, params, floors, check) for seg in draw.segments)


def score(draw: TrajectoryDraw, floors: Floors = DEFAULT_FLOORS, check: bool = True) -> TrajectoryDraw:
    """Copy of ``draw`` with its log-likelihood filled in."""
    return replace(draw, loglik=trajectory_loglik(draw, None, floors, check))
