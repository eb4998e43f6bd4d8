"""Prior sampling, run configuration and the likelihood-filtered parametric bootstrap."""

from __future__ import annotations

import json
import math
import os
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import InputError, ModelParams, Receiver, SegmentSpec, TrajectoryDraw
from .likelihood import score
from .movement import DEFAULT_FLOORS, Floors, RemainingDistanceMode, impute_trajectory


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the parameter priors.

    alpha ~ Gamma(shape, rate); phi and gamma ~ LogNormal with the given
    mean and variance of the underlying Normal; sigma_r_sq ~ InvGamma(shape,
    scale); beta is held fixed.
    """

    alpha_shape: float = 10.0
    alpha_rate: float = 10.0
    phi_logmean: float = 0.5
    phi_logvar: float = 100.0
    gamma_logmean: float = 2.0
    gamma_logvar: float = 1.0
    sigma_r_shape: float = 3.0
    sigma_r_scale: float = 0.00298
    beta_fixed: int = 3

    def __post_init__(self):
        for name in ("alpha_shape", "alpha_rate", "phi_logvar", "gamma_logvar",
                     "sigma_r_shape", "sigma_r_scale"):
            if not getattr(self, name) > 0:
                raise InputError(f"prior hyperparameter {name} must be > 0, got {getattr(self, name)}")
        if int(self.beta_fixed) != self.beta_fixed or self.beta_fixed < 0:
            raise InputError(f"beta_fixed must be a nonnegative integer, got {self.beta_fixed}")


DEFAULT_PRIORS = PriorConfig()

# Same families rescaled to meters: 3 * E[sigma_r] ~ 500 m, step sd ~ d**0.75,
# initial angular variance around 0.25 rad^2.
METERS_CALIBRATED = PriorConfig(
    alpha_shape=10.0,
    alpha_rate=10.0,
    phi_logmean=math.log(1.5),
    phi_logvar=0.01,
    gamma_logmean=math.log(0.25),
    gamma_logvar=0.25,
    sigma_r_shape=3.0,
    sigma_r_scale=55_600.0,
    beta_fixed=3,
)


def sample_params(config: PriorConfig, rng: np.random.Generator, r_m: float = 500.0) -> ModelParams:
    alpha = rng.gamma(config.alpha_shape, 1.0 / config.alpha_rate)
    phi = rng.lognormal(config.phi_logmean, math.sqrt(config.phi_logvar))
    gamma = rng.lognormal(config.gamma_logmean, math.sqrt(config.gamma_logvar))
    sigma_r_sq = config.sigma_r_scale / rng.gamma(config.sigma_r_shape, 1.0)
    return ModelParams(
        alpha=float(alpha),
        beta=int(config.beta_fixed),
        gamma=float(gamma),
        phi=float(phi),
        sigma_r_sq=float(sigma_r_sq),
        r_m=r_m,
    )


def iteration_rng(seed: int, i: int) -> np.random.Generator:
    """Generator for bootstrap iteration ``i``; depends only on ``(seed, i)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def n_keep(n_iter: int, keep_frac: float) -> int:
    # guard against 0.9 * 5000 landing a hair above 4500 in binary
    return min(n_iter, max(1, math.ceil(round(keep_frac * n_iter, 9))))


@dataclass
class BootstrapResult:
    retained: list[TrajectoryDraw]
    n_total: int
    n_retained: int
    seed: int
    logliks: np.ndarray = field(repr=False)

    @property
    def min_retained_loglik(self) -> float:
        return min(d.loglik for d in self.retained)

    @property
    def max_discarded_loglik(self) -> float:
        kept = {d.draw_id for d in self.retained}
        rest = [-math.inf if math.isnan(ll) else ll for i, ll in enumerate(self.logliks) if i not in kept]
        return max(rest) if rest else -math.inf


@dataclass(frozen=True)
class _Job:
    specs: tuple[SegmentSpec, ...]
    priors: PriorConfig
    mode: RemainingDistanceMode
    seed: int
    r_m: float
    floors: Floors
    enforce_endpoints: bool
    avoid: tuple[Receiver, ...] | None


def _run_range(job: _Job, start: int, stop: int) -> list[TrajectoryDraw]:
    out = []
    for i in range(start, stop):
        rng = iteration_rng(job.seed, i)
        params = sample_params(job.priors, rng, job.r_m)
        draw = impute_trajectory(
            job.specs, params, job.mode, rng,
            floors=job.floors, enforce_endpoints=job.enforce_endpoints,
            avoid=job.avoid, draw_id=i,
        )
        out.append(score(draw, job.floors))
    return out


def _run_chunk(args) -> list[TrajectoryDraw]:
    return _run_range(*args)


def _sort_key(draw: TrajectoryDraw):
    ll = draw.loglik
    return (-ll if not math.isnan(ll) else math.inf, draw.draw_id)


def run_bootstrap(
    specs: Sequence[SegmentSpec],
    config: PriorConfig,
    n_iter: int,
    keep_frac: float,
    mode: RemainingDistanceMode = RemainingDistanceMode.LITERAL,
    seed: int = 0,
    *,
    r_m: float = 500.0,
    floors: Floors = DEFAULT_FLOORS,
    workers: int = 1,
    enforce_endpoints: bool = False,
    avoid: Sequence[Receiver] | None = None,
) -> BootstrapResult:
    """Simulate ``n_iter`` trajectories under fresh prior draws and keep the most likely.

    Every iteration gets its own generator derived from ``(seed, i)``, so the
    result is identical for any ``workers``. The top ``ceil(keep_frac *
    n_iter)`` draws by log-likelihood are retained, ties going to the lower
    iteration index.
    """
    if not specs:
        raise InputError("no segments to impute")
    if n_iter < 1:
        raise InputError(f"n_iter must be >= 1, got {n_iter}")
    if not 0 < keep_frac <= 1:
        raise InputError(f"keep_frac must be in (0, 1], got {keep_frac}")
    if seed < 0:
        raise InputError(f"seed must be nonnegative, got {seed}")

    job = _Job(tuple(specs), config, mode, int(seed), r_m, floors, enforce_endpoints,
               tuple(avoid) if avoid else None)
    workers = max(1, min(int(workers), n_iter))
    if workers == 1:
        draws = _run_range(job, 0, n_iter)
    else:
        n_chunks = min(n_iter, workers * 4)
        bounds = np.linspace(0, n_iter, n_chunks + 1).astype(int)
        chunks = [(job, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            draws = [d for part in pool.map(_run_chunk, chunks) for d in part]

    logliks = np.array([d.loglik for d in draws])
    keep = n_keep(n_iter, keep_frac)
    retained = sorted(draws, key=_sort_key)[:keep]
    return BootstrapResult(retained, n_iter, keep, int(seed), logliks)


@dataclass(frozen=True)
class HeatmapSettings:
    cell_m: float = 250.0
    padding_m: float = 1000.0
    include_endpoints: bool = True
    max_cells: int = 4_000_000


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs besides the input tables."""

    priors: PriorConfig = field(default_factory=PriorConfig)
    n_iter: int = 5000
    keep_frac: float = 0.9
    seed: int | None = None
    radius_m: float = 500.0
    mode: RemainingDistanceMode = RemainingDistanceMode.LITERAL
    enforce_endpoint_radius: bool = False
    strict_outside_receivers: bool = False
    floors: Floors = field(default_factory=Floors)
    heatmap: HeatmapSettings = field(default_factory=HeatmapSettings)

    def to_dict(self) -> dict:
        return {
            "priors": asdict(self.priors),
            "bootstrap": {"n_iter": self.n_iter, "keep_frac": self.keep_frac, "seed": self.seed},
            "model": {
                "radius_m": self.radius_m,
                "remaining_distance_mode": self.mode.value,
                "enforce_endpoint_radius": self.enforce_endpoint_radius,
                "strict_outside_receivers": self.strict_outside_receivers,
            },
            "floors": asdict(self.floors),
            "heatmap": asdict(self.heatmap),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        _reject_unknown("config", data, {"priors", "bootstrap", "model", "floors", "heatmap"})
        boot = dict(data.get("bootstrap", {}))
        _reject_unknown("bootstrap", boot, {"n_iter", "keep_frac", "seed"})
        model = dict(data.get("model", {}))
        _reject_unknown("model", model, {"radius_m", "remaining_distance_mode",
                                         "enforce_endpoint_radius", "strict_outside_receivers"})
        try:
            mode = RemainingDistanceMode(model.pop("remaining_distance_mode", "literal"))
        except ValueError as exc:
            raise InputError(str(exc)) from None
        cfg = cls(
            priors=_build(PriorConfig, "priors", data.get("priors", {})),
            floors=_build(Floors, "floors", data.get("floors", {})),
            heatmap=_build(HeatmapSettings, "heatmap", data.get("heatmap", {})),
            mode=mode,
            **boot,
            **model,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not (isinstance(self.n_iter, int) and self.n_iter >= 1):
            raise InputError(f"n_iter must be a positive integer, got {self.n_iter!r}")
        if not 0 < self.keep_frac <= 1:
            raise InputError(f"keep_frac must be in (0, 1], got {self.keep_frac}")
        if self.seed is not None and not (isinstance(self.seed, int) and self.seed >= 0):
            raise InputError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if not self.radius_m > 0:
            raise InputError(f"radius_m must be > 0, got {self.radius_m}")
        if not self.heatmap.cell_m > 0:
            raise InputError(f"heatmap cell_m must be > 0, got {self.heatmap.cell_m}")
        if not (isinstance(self.heatmap.max_cells, int) and self.heatmap.max_cells >= 1):
            raise InputError(f"heatmap max_cells must be a positive integer, got {self.heatmap.max_cells!r}")
        if self.heatmap.padding_m < 0:
            raise InputError(f"heatmap padding_m must be >= 0, got {self.heatmap.padding_m}")


def _reject_unknown(section: str, data: dict, allowed: set[str]) -> None:
    extra = set(data) - allowed
    if extra:
        raise InputError(f"unknown {section} key(s): {', '.join(sorted(extra))}")


def _build(cls, section: str, data: dict):
    _reject_unknown(section, data, {f.name for f in fields(cls)})
    return cls(**data)


def load_config(path: str | os.PathLike | None) -> RunConfig:
    """Read a run configuration; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise InputError(f"{path}: {exc}") from None


def dump_config(config: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path
