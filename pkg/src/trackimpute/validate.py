"""Numerical self-checks run by ``trackimpute validate``.

Each oracle computes its reference by an independent route (sampling,
exact arithmetic, quadrature, or a library density) and compares against
the engine's closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special, stats

from . import likelihood as lk
from .bootstrap import METERS_CALIBRATED, PriorConfig, sample_params
from .core import PlanarPoint, Receiver, SegmentSpec
from .movement import Floors, RemainingDistanceMode, impute_segment

TAYLOR_THETAS = (0.0, 0.7, 2.4)
TAYLOR_SIGMAS = (0.01, 0.05, 0.25)


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def stratified_normal(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` standard Normal draws, one per equal-probability stratum."""
    u = (np.arange(n) + rng.uniform(size=n)) / n
    return special.ndtri(u)


def taylor_mc_check(theta: float, s: float, n: int, rng: np.random.Generator):
    """Largest moment error and tolerance for one ``(theta, sigma_psi_sq)`` pair.

    Returns ``(max_err, tol)`` where ``tol = max(3 * iid standard error, s**2)``
    per moment; the stratified sample's actual error is far below the iid
    standard error, which is used as the conservative noise allowance.
    """
    z = theta + math.sqrt(s) * stratified_normal(n, rng)
    zc, zs = np.cos(z), np.sin(z)
    tm = lk.taylor_moments(theta, s)

    emp_mu = np.array([zc.mean(), zs.mean()])
    se_mu = np.array([zc.std(), zs.std()]) / math.sqrt(n)
    dc, ds = zc - emp_mu[0], zs - emp_mu[1]
    prods = {(0, 0): dc * dc, (1, 1): ds * ds, (0, 1): dc * ds}
    worst = 0.0
    for i in range(2):
        err = abs(emp_mu[i] - tm.mu_z[i])
        worst = max(worst, err / max(3 * se_mu[i], s * s))
    for (i, j), p in prods.items():
        err = abs(p.mean() - tm.sigma_z[i, j])
        se = p.std() / math.sqrt(n)
        worst = max(worst, err / max(3 * se, s * s))
    return worst


def check_taylor_moments(n: int = 1_000_000, seed: int = 11) -> OracleResult:
    rng = np.random.default_rng(seed)
    ratios = {
        (th, s): taylor_mc_check(th, s, n, rng) for th in TAYLOR_THETAS for s in TAYLOR_SIGMAS
    }
    worst = max(ratios.values())
    (th, s) = max(ratios, key=ratios.get)
    return OracleResult(
        "taylor moments vs sampling",
        worst <= 1.0,
        f"{len(ratios)} settings, {n} samples each; worst error/tolerance {worst:.3f} at theta={th}, s={s}",
    )


def exact_det(m: np.ndarray) -> Fraction:
    a, b, c, d = (Fraction(float(v)) for v in (m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
    return a * d - b * c


def check_determinant(n: int = 1000, seed: int = 12) -> OracleResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for theta, s in zip(rng.uniform(-math.pi, math.pi, n), rng.uniform(0.01, 1.0, n)):
        exact = exact_det(lk.taylor_moments(theta, s).sigma_z)
        closed = Fraction(lk.sigma_z_det(float(s)))
        worst = max(worst, float(abs(exact - closed) / abs(exact)))
    return OracleResult(
        "det(sigma_z) = s^3/2", worst <= 1e-12, f"{n} random pairs; max relative error {worst:.2e}"
    )


def hand_composed_t4(draw, params, floors: Floors) -> float:
    """Log-likelihood of a T=4 segment assembled term by term with library densities."""
    spec = draw.spec
    x1, x2, x3, x4 = ([p.x, p.y] for p in draw.positions)
    r1, r4 = spec.start_receiver.position, spec.end_receiver.position
    cov_r = params.sigma_r_sq * np.eye(2)
    total = stats.multivariate_normal.logpdf(x1, [r1.x, r1.y], cov_r)
    total += stats.multivariate_normal.logpdf(x4, [r4.x, r4.y], cov_r)
    for prev, cur, lat in ((x1, x2, draw.latents[0]), (x2, x3, draw.latents[1])):
        th, s, D = lat.theta, lat.sigma_psi_sq, abs(lat.dist_draw)
        c, si = math.cos(th), math.sin(th)
        mu = np.array(prev) + D * np.array([c - 0.5 * c * s, si - 0.5 * si * s])
        off = -si * c + 0.5 * si * c * s
        sig = s * np.array([[si**2 + 0.5 * c**2 * s, off], [off, c**2 + 0.5 * si**2 * s]])
        total += stats.multivariate_normal.logpdf(cur, mu, D * D * sig)
        var = max(lat.d_remaining**params.phi, floors.eps_v)
        total += stats.norm.logpdf(lat.dist_draw, lat.d_remaining / (4 - (lat.t - 1)), math.sqrt(var))
    return float(total)


def t4_spec() -> SegmentSpec:
    a = Receiver("A", PlanarPoint(-3000.0, 1000.0))
    b = Receiver("B", PlanarPoint(4000.0, -2500.0))
    return SegmentSpec("oracle", 1, a, b, 4)


def check_t4_factorization(n: int = 100, seed: int = 13) -> OracleResult:
    rng = np.random.default_rng(seed)
    spec = t4_spec()
    floors = Floors()
    worst = 0.0
    for _ in range(n):
        params = sample_params(METERS_CALIBRATED, rng)
        draw = impute_segment(spec, params, RemainingDistanceMode.LITERAL, rng, floors=floors)
        got = lk.segment_loglik(draw, params, floors)
        want = hand_composed_t4(draw, params, floors)
        worst = max(worst, abs(got - want))
    return OracleResult(
        "T=4 factorization", worst <= 1e-10, f"{n} draws; max |difference| {worst:.2e}"
    )


def check_prior_moments(n: int = 100_000, seed: int = 14, config: PriorConfig | None = None) -> OracleResult:
    config = config or PriorConfig()
    rng = np.random.default_rng(seed)
    draws = [sample_params(config, rng) for _ in range(n)]
    alpha = np.array([p.alpha for p in draws])
    sig = np.array([p.sigma_r_sq for p in draws])
    a_mean = config.alpha_shape / config.alpha_rate
    a_se = math.sqrt(config.alpha_shape) / config.alpha_rate / math.sqrt(n)
    k, th = config.sigma_r_shape, config.sigma_r_scale
    s_mean = th / (k - 1)
    s_se = math.sqrt(th**2 / ((k - 1) ** 2 * (k - 2)) / n)
    ok_a = abs(alpha.mean() - a_mean) <= 3 * a_se
    ok_s = abs(sig.mean() - s_mean) <= 3 * s_se
    ok_b = all(p.beta == config.beta_fixed for p in draws)
    return OracleResult(
        "prior moments",
        ok_a and ok_s and ok_b,
        f"alpha mean {alpha.mean():.5f} (expect {a_mean:.5f} +/- {3 * a_se:.1e}); "
        f"sigma_r^2 mean {sig.mean():.3e} (expect {s_mean:.3e} +/- {3 * s_se:.1e}); "
        f"beta fixed at {config.beta_fixed}: {ok_b}",
    )


LOGP1_CASES = ((0.3, 0.05, 1500.0), (2.0, 0.2, 800.0), (-1.2, 0.01, 3000.0))
LOGP0_CASES = (1.0e4, 2.5e5, 0.00149)
LOGP2_CASES = ((5000.0, 2, 5, 1.3), (800.0, 3, 6, 0.0), (12000.0, 4, 12, 2.2))


def _midpoints(halfwidth: float, m: int) -> tuple[np.ndarray, float]:
    h = 2 * halfwidth / m
    return -halfwidth + h * (np.arange(m) + 0.5), h


def integrate_logp1(theta: float, s: float, D: float, m: int = 240) -> float:
    """Midpoint rule over a +/-6 sd box in the principal axes of the step covariance."""
    tm = lk.taylor_moments(theta, s)
    evals, evecs = np.linalg.eigh(D * D * tm.sigma_z)
    prev = PlanarPoint(250.0, -75.0)
    mean = np.array([prev.x, prev.y]) + D * tm.mu_z
    a, ha = _midpoints(6 * math.sqrt(evals[0]), m)
    b, hb = _midpoints(6 * math.sqrt(evals[1]), m)
    total = 0.0
    for ai in a:
        for bj in b:
            x = mean + ai * evecs[:, 0] + bj * evecs[:, 1]
            total += math.exp(lk.logp1(PlanarPoint(x[0], x[1]), prev, D, theta, s))
    return total * ha * hb


def integrate_logp0(sigma_r_sq: float, m: int = 240) -> float:
    """Integral over x1 of exp(logp0) with xT at its receiver, rescaled by 2*pi*sigma^2."""
    r1 = Receiver("a", PlanarPoint(100.0, 200.0))
    rT = Receiver("b", PlanarPoint(-700.0, 50.0))
    sd = math.sqrt(sigma_r_sq)
    g, h = _midpoints(6 * sd, m)
    total = 0.0
    for gx in g:
        for gy in g:
            x1 = PlanarPoint(r1.position.x + gx, r1.position.y + gy)
            total += math.exp(lk.logp0(x1, rT.position, r1, rT, sigma_r_sq))
    return total * h * h * 2 * math.pi * sigma_r_sq


def integrate_logp2(d: float, t: int, T: int, phi: float, m: int = 4000) -> float:
    from .movement import step_mean, step_variance

    sd = math.sqrt(step_variance(d, phi))
    g, h = _midpoints(6 * sd, m)
    mu = step_mean(d, t, T)
    return h * sum(math.exp(lk.logp2(mu + x, d, t, T, phi)) for x in g)


def check_normalization(m: int = 240) -> OracleResult:
    vals = [integrate_logp1(*c, m=m) for c in LOGP1_CASES]
    vals += [integrate_logp0(c, m=m) for c in LOGP0_CASES]
    vals += [integrate_logp2(*c) for c in LOGP2_CASES]
    worst = max(abs(v - 1) for v in vals)
    return OracleResult(
        "density normalization",
        worst <= 1e-3,
        f"{len(vals)} integrals (step, endpoint, length); max |integral - 1| {worst:.2e}",
    )


def run_all(quick: bool = False) -> list[OracleResult]:
    if quick:
        return [
            check_taylor_moments(n=100_000),
            check_determinant(),
            check_t4_factorization(),
            check_prior_moments(n=20_000),
            check_normalization(m=120),
        ]
    return [
        check_taylor_moments(),
        check_determinant(),
        check_t4_factorization(),
        check_prior_moments(),
        check_normalization(),
    ]
