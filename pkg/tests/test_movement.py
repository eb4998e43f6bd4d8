import math

import numpy as np
import pytest
from scipy import stats

from trackimpute.core import ModelParams, PlanarPoint, Receiver, SegmentSpec, angle_to, distance
from trackimpute.movement import (
    Floors,
    RemainingDistanceMode,
    advance,
    impute_segment,
    impute_trajectory,
    remaining_distance,
    replay_positions,
    sample_endpoint,
    sample_step,
    sigma_psi_sq,
    step_variance,
)

LITERAL = RemainingDistanceMode.LITERAL
ADJUSTED = RemainingDistanceMode.ADJUSTED


def test_endpoint_covariance():
    rng = np.random.default_rng(1)
    rec = Receiver("r", PlanarPoint(1000.0, -2000.0))
    pts = np.array([[p.x, p.y] for p in (sample_endpoint(rec, 40000.0, rng) for _ in range(20000))])
    assert pts.mean(axis=0) == pytest.approx([1000.0, -2000.0], abs=5.0)
    cov = np.cov(pts.T)
    assert cov[0, 0] == pytest.approx(40000.0, rel=0.05)
    assert cov[1, 1] == pytest.approx(40000.0, rel=0.05)
    assert abs(cov[0, 1]) < 0.05 * 40000.0


def test_endpoint_enforced_radius():
    rng = np.random.default_rng(2)
    rec = Receiver("r", PlanarPoint(0.0, 0.0), radius_m=500.0)
    pts = [sample_endpoint(rec, 1e6, rng, enforce=True) for _ in range(500)]
    assert max(distance(p, rec.position) for p in pts) <= 500.0


def test_endpoint_enforced_pathological():
    rec = Receiver("r", PlanarPoint(0.0, 0.0), radius_m=500.0)
    with pytest.raises(ValueError, match="acceptance"):
        sample_endpoint(rec, 1e14, np.random.default_rng(0), enforce=True)


@pytest.mark.parametrize(
    "a, mode, expected",
    [(3000.0, LITERAL, 3000.0), (3000.0, ADJUSTED, 2000.0), (800.0, ADJUSTED, 1.0), (0.0, LITERAL, 1.0)],
)
def test_remaining_distance(a, mode, expected):
    assert remaining_distance(PlanarPoint(0.0, 0.0), PlanarPoint(a, 0.0), 500.0, mode) == expected


def test_sigma_psi_short_gap_is_deterministic():
    params = ModelParams(alpha=0.8, beta=3, gamma=0.3, phi=1.0, sigma_r_sq=1.0)
    rng = np.random.default_rng(0)
    n = 3
    got = [sigma_psi_sq(t, n, params, rng) for t in range(2, n + 2)]
    want = [0.3 * math.exp(0.8 * (n - (t - 1))) for t in range(2, n + 2)]
    assert got == want
    # no randomness consumed
    assert rng.uniform() == np.random.default_rng(0).uniform()


def test_sigma_psi_long_gap_is_uniform():
    params = ModelParams(alpha=0.8, beta=3, gamma=0.3, phi=1.0, sigma_r_sq=1.0)
    rng = np.random.default_rng(3)
    u = np.array([sigma_psi_sq(2, 4, params, rng) / 0.3 for _ in range(5000)])
    assert u.min() >= 0.0 and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 0.01


@pytest.mark.parametrize("d, phi, floors, expected", [
    (100.0, 2.0, Floors(), 10000.0),
    (100.0, -20.0, Floors(), 1e-6),
    (1e9, 5.0, Floors(), 1e12),
    (0.0, 1.0, Floors(eps_v=3.0), 3.0),
])
def test_step_variance_clipping(d, phi, floors, expected):
    assert step_variance(d, phi, floors) == pytest.approx(expected)


def test_advance_uses_absolute_length():
    p = advance(PlanarPoint(0.0, 0.0), -5.0, 0.0, math.pi / 2)
    assert p.x == pytest.approx(0.0, abs=1e-12)
    assert p.y == pytest.approx(5.0)


def test_step_length_is_folded_normal():
    params = ModelParams(alpha=1.0, beta=3, gamma=0.1, phi=1.2, sigma_r_sq=1.0)
    x_prev, x_star = PlanarPoint(0.0, 0.0), PlanarPoint(600.0, 0.0)
    rng = np.random.default_rng(4)
    T, t = 6, 2
    lengths = []
    for _ in range(5000):
        x, lat = sample_step(x_prev, x_star, t, T, params, LITERAL, rng)
        lengths.append(distance(x_prev, x))
    mu = 600.0 / (T - (t - 1))
    sd = math.sqrt(600.0**1.2)
    assert stats.kstest(lengths, stats.foldnorm(mu / sd, scale=sd).cdf).pvalue > 0.01


def test_zero_noise_walk_is_straight():
    floors = Floors(eps_v=1e-30)
    params = ModelParams(alpha=1.0, beta=3, gamma=1e-300, phi=-50.0, sigma_r_sq=1e-300)
    a = Receiver("a", PlanarPoint(-4000.0, 1000.0))
    b = Receiver("b", PlanarPoint(6000.0, 7000.0))
    spec = SegmentSpec("f", 1, a, b, 7)
    draw = impute_segment(spec, params, LITERAL, np.random.default_rng(5), floors=floors)
    heading = angle_to(a.position, b.position)
    for prev, cur, lat in zip(draw.positions, draw.positions[1:], draw.latents):
        want = lat.d_remaining / (spec.T - (lat.t - 1))
        assert distance(prev, cur) == pytest.approx(want, rel=1e-6)
        assert abs(angle_to(a.position, cur) - heading) < 1e-9


def test_replay_reproduces_positions(single_spec, params):
    draw = impute_segment(single_spec, params, LITERAL, np.random.default_rng(6))
    for got, want in zip(replay_positions(draw), draw.positions):
        assert got.x == pytest.approx(want.x, rel=1e-12, abs=1e-9)
        assert got.y == pytest.approx(want.y, rel=1e-12, abs=1e-9)


def test_trajectory_is_chained(twelve_day_specs, params):
    draw = impute_trajectory(twelve_day_specs, params, LITERAL, np.random.default_rng(7))
    draw.check_chaining()
    assert [len(s.positions) for s in draw.segments] == [5, 6, 3]
    assert draw.n_days == 12


def test_same_seed_same_draw(twelve_day_specs, params):
    a = impute_trajectory(twelve_day_specs, params, LITERAL, np.random.default_rng(8))
    b = impute_trajectory(twelve_day_specs, params, LITERAL, np.random.default_rng(8))
    assert a == b


def test_strict_mode_avoids_receivers(params):
    rng = np.random.default_rng(9)
    a = Receiver("a", PlanarPoint(0.0, 0.0))
    b = Receiver("b", PlanarPoint(6000.0, 0.0))
    blocker = Receiver("c", PlanarPoint(3000.0, 0.0), radius_m=800.0)
    spec = SegmentSpec("f", 1, a, b, 5)
    for _ in range(50):
        draw = impute_segment(spec, params, LITERAL, rng, avoid=[blocker])
        assert all(distance(p, blocker.position) > 800.0 for p in draw.positions[1:-1])
