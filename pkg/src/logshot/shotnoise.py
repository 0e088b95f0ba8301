"""Monte Carlo simulation of shot-noise paths on a time grid.

A path is built from a homogeneous Poisson process of epochs T_j on
(0, horizon] with amplitudes R_j ~ F_{T_j}, then summed through a kernel:

    S(t) = sum_{T_j <= t} g(t, T_j) R_j.

Each path m of an ensemble draws from its own generator, derived from
(seed, m) with ``numpy.random.SeedSequence`` spawn keys, so ensembles do
not depend on the order or the number of workers that produce them.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import math
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DomainError
from .kernels import Kernel
from .noise import NoiseModel

# keeps the grid x arrivals work matrix around 32 MB
_BLOCK = 4_000_000


@dataclass(frozen=True)
class ArrivalSet:
    lam: float
    horizon: float
    epochs: np.ndarray
    marks: Optional[np.ndarray] = None

    def __post_init__(self):
        e = self.epochs
        if e.size and (e[0] <= 0 or e[-1] > self.horizon or np.any(np.diff(e) <= 0)):
            raise DomainError("epochs must be strictly increasing inside (0, horizon]")
        if self.marks is not None and self.marks.shape != e.shape:
            raise DomainError("marks and epochs differ in length")

    def __len__(self):
        return self.epochs.size


@dataclass
class SamplePath:
    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def at(self, t: float) -> float:
        return float(self.values[_grid_index(self.grid, t)])


@dataclass
class Ensemble:
    """M paths on a shared grid; ``values`` has shape (M, len(grid))."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, m) -> SamplePath:
        return SamplePath(self.grid, self.values[m], dict(self.meta, path=m))

    def __iter__(self) -> Iterator[SamplePath]:
        for m in range(len(self)):
            yield self[m]

    def column(self, t: float) -> np.ndarray:
        return self.values[:, _grid_index(self.grid, t)]


@dataclass(frozen=True)
class SimConfig:
    kernel: Kernel
    noise: NoiseModel
    lam: float
    grid: np.ndarray
    seed: int = 20240
    ensemble_size: int = 1
    scale_c: Optional[float] = None
    alpha: Optional[float] = None
    K: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "grid", validate_grid(self.grid))
        if not self.lam > 0:
            raise DomainError(f"lambda must be > 0, got {self.lam!r}")
        if self.ensemble_size < 1:
            raise DomainError("ensemble_size must be >= 1")
        if self.grid[-1] <= 0:
            raise DomainError("grid must contain a positive time")
        if self.alpha is not None:
            if not 1.0 < self.alpha < 2.0:
                raise DomainError(f"alpha must lie in (1, 2), got {self.alpha!r}")
            if not math.isclose(self.kernel.beta, (self.alpha - 1) / 2, rel_tol=0, abs_tol=1e-12):
                raise DomainError("kernel beta must equal (alpha - 1)/2")
        if self.scale_c is not None and not self.scale_c >= 1:
            raise DomainError(f"scale c must be >= 1, got {self.scale_c!r}")

    @property
    def scaled(self) -> bool:
        return self.alpha is not None and self.scale_c is not None

    @property
    def horizon(self) -> float:
        c = self.scale_c if self.scaled else 1.0
        return c * float(self.grid[-1])

    def normalization(self) -> float:
        """sqrt(c K lambda Gamma(alpha)) for the scaled process, else 1."""
        if not self.scaled:
            return 1.0
        K = self.K if self.K is not None else self.noise.limit
        if K is None or not K > 0:
            raise DomainError("the scaled process needs a positive limiting variance K")
        return math.sqrt(self.scale_c * K * self.lam * math.gamma(self.alpha))


def validate_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise DomainError("empty time grid")
    if np.any(~np.isfinite(g)) or g[0] < 0:
        raise DomainError("grid times must be finite and >= 0")
    if np.any(np.diff(g) <= 0):
        raise DomainError("grid must be strictly increasing")
    return g


def _grid_index(grid: np.ndarray, t: float) -> int:
    i = int(np.searchsorted(grid, t))
    if i == grid.size or not math.isclose(grid[i], t, rel_tol=1e-12, abs_tol=1e-300):
        if i > 0 and math.isclose(grid[i - 1], t, rel_tol=1e-12):
            return i - 1
        raise DomainError(f"time {t!r} is not on the grid")
    return i


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for path ``index`` of the ensemble seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _poisson_epochs(lam, horizon, rng):
    mean = lam * horizon
    batch = int(mean + 6.0 * math.sqrt(mean) + 16)
    epochs = np.cumsum(rng.exponential(1.0 / lam, size=batch))
    while epochs[-1] <= horizon:
        more = epochs[-1] + np.cumsum(rng.exponential(1.0 / lam, size=batch))
        epochs = np.concatenate([epochs, more])
    epochs = epochs[: np.searchsorted(epochs, horizon, side="right")]
    return epochs


def simulate_arrivals(lam: float, horizon: float, rng: np.random.Generator) -> ArrivalSet:
    """Poisson epochs on (0, horizon] as cumulative exponential gaps."""
    if not lam > 0:
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    if not horizon > 0 or not math.isfinite(horizon):
        raise DomainError(f"horizon must be finite and > 0, got {horizon!r}")
    return ArrivalSet(lam, horizon, _poisson_epochs(lam, horizon, rng))


def attach_marks(arrivals: ArrivalSet, noise: NoiseModel, rng: np.random.Generator) -> ArrivalSet:
    if arrivals.marks is not None:
        raise DomainError("arrivals already carry marks")
    marks = np.asarray(noise.sample(arrivals.epochs, rng), dtype=float).reshape(arrivals.epochs.shape)
    return replace(arrivals, marks=marks)


def _lag_coords(kernel: Kernel, times: np.ndarray) -> np.ndarray:
    if kernel.family == "log":
        with np.errstate(divide="ignore"):
            return np.log(times)
    return times


def _weighted_sum(kernel: Kernel, tt: np.ndarray, times: np.ndarray,
                  epochs: np.ndarray, marks: np.ndarray) -> np.ndarray:
    """sum_j g(t_i, T_j) R_j, with ``tt`` the lag coordinates of ``times``."""
    out = np.zeros(times.size)
    if epochs.size == 0:
        return out
    ee = np.log(epochs) if kernel.family == "log" else epochs
    # arrivals after a grid time contribute nothing to it
    counts = np.searchsorted(epochs, times, side="right")
    rows = max(1, _BLOCK // epochs.size)
    for start in range(0, times.size, rows):
        stop = min(times.size, start + rows)
        k = counts[stop - 1]
        if k == 0:
            continue
        lag = tt[start:stop, None] - ee[None, :k]
        w = np.where(lag > 0, np.abs(lag) ** kernel.beta, 0.0)
        out[start:stop] = w @ marks[:k]
    return out


def _kernel_sum(kernel: Kernel, times: np.ndarray, arrivals: ArrivalSet) -> np.ndarray:
    return _weighted_sum(kernel, _lag_coords(kernel, times), times,
                         arrivals.epochs, arrivals.marks)


def evaluate_path(arrivals: ArrivalSet, kernel: Kernel, grid, meta: Optional[dict] = None) -> SamplePath:
    """The path of the shot-noise process on ``grid``."""
    grid = validate_grid(grid)
    if arrivals.marks is None:
        raise DomainError("arrivals have no marks attached")
    if grid[-1] > arrivals.horizon * (1 + 1e-12):
        raise DomainError("grid extends beyond the simulated horizon")
    values = _kernel_sum(kernel, grid, arrivals)
    meta = dict(meta or {}, kernel=kernel.family, beta=kernel.beta)
    return SamplePath(grid, values, meta)


def simulate_marked(config: SimConfig, rng: np.random.Generator) -> ArrivalSet:
    arrivals = simulate_arrivals(config.lam, config.horizon, rng)
    return attach_marks(arrivals, config.noise, rng)


def _path_values(config: SimConfig, arrivals: ArrivalSet, kernel: Kernel) -> np.ndarray:
    if config.scaled:
        return _kernel_sum(kernel, config.scale_c * config.grid, arrivals) / config.normalization()
    return _kernel_sum(kernel, config.grid, arrivals)


def _meta(config: SimConfig, kernel: Kernel) -> dict:
    meta = {"kernel": kernel.family, "beta": kernel.beta, "noise": config.noise.name,
            "law": config.noise.law, "seed": config.seed, "lambda": config.lam}
    if config.scaled:
        meta.update(scale_c=config.scale_c, alpha=config.alpha)
    return meta


def simulate_path(config: SimConfig, rng: np.random.Generator) -> SamplePath:
    """One path of S (or of the scaled process when alpha and c are set)."""
    arrivals = simulate_marked(config, rng)
    return SamplePath(config.grid, _path_values(config, arrivals, config.kernel),
                      _meta(config, config.kernel))


def simulate_scaled(config: SimConfig, rng: np.random.Generator) -> SamplePath:
    """S(c t) / sqrt(c K lambda Gamma(alpha)) on the grid t."""
    if not config.scaled:
        raise DomainError("simulate_scaled needs alpha and scale_c in the config")
    return simulate_path(config, rng)


def _draw(lam: float, horizon: float, noise: NoiseModel, rng: np.random.Generator):
    """Epochs and marks without per-path validation; same stream as
    ``simulate_arrivals`` followed by ``attach_marks``."""
    epochs = _poisson_epochs(lam, horizon, rng)
    return epochs, noise.sample(epochs, rng)


def simulate_ensemble(config: SimConfig, kernels: Optional[Sequence[Kernel]] = None,
                      workers: int = 1):
    """Ensemble of ``config.ensemble_size`` independent paths.

    With ``kernels`` given, every path is evaluated under each kernel from
    the same epochs and amplitudes and a dict family -> Ensemble is returned.
    """
    single = kernels is None
    kernels = [config.kernel] if single else list(kernels)
    if config.horizon > config.noise.horizon:
        raise DomainError(
            f"simulation horizon {config.horizon:g} exceeds the admissible "
            f"horizon {config.noise.horizon:g} of the noise model")
    M, n = config.ensemble_size, config.grid.size
    times = config.scale_c * config.grid if config.scaled else config.grid
    norm = config.normalization()
    coords = [_lag_coords(k, times) for k in kernels]
    out = {k.family: np.empty((M, n)) for k in kernels}

    def run(block):
        for m in block:
            epochs, marks = _draw(config.lam, config.horizon, config.noise,
                                  path_rng(config.seed, m))
            for k, tt in zip(kernels, coords):
                out[k.family][m] = _weighted_sum(k, tt, times, epochs, marks) / norm

    blocks = np.array_split(np.arange(M), max(1, min(M, 8 * workers)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    else:
        for block in blocks:
            run(block)
    ens = {k.family: Ensemble(config.grid, out[k.family], _meta(config, k)) for k in kernels}
    return ens[config.kernel.family] if single else ens
