"""Hadamard fractional Brownian motion: covariance, increment variance,
exact Gaussian sampling and the increment-variance property checks.

For alpha in (0, 1) or (1, 2) the covariance is

    sigma(s, t) = t                                   if s == t
                = C_alpha m Psi((1-alpha)/2, 1-alpha; log(M/m))   otherwise,

with m = min(s, t), M = max(s, t) and C_alpha = 2^(1-alpha) sqrt(pi) / Gamma(alpha/2).
alpha = 1 is the Brownian case, sigma(s, t) = min(s, t).
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError, NumericalError
from .shotnoise import Ensemble, validate_grid
from .specfun import tricomi_psi

_JITTER = (0.0, 1e-14, 1e-12)


@dataclass(frozen=True)
class HfbmParams:
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise DomainError(f"alpha must lie in (0, 1) or (1, 2), got {self.alpha!r}")

    @classmethod
    def brownian(cls) -> "HfbmParams":
        return cls(1.0)

    @property
    def is_brownian(self) -> bool:
        return self.alpha == 1.0

    @property
    def long_memory(self) -> bool:
        return self.alpha > 1.0


@dataclass
class CovMatrix:
    grid: np.ndarray
    entries: np.ndarray
    factor: np.ndarray
    jitter: float = 0.0


def c_alpha(alpha: float) -> float:
    return 2.0 ** (1.0 - alpha) * math.sqrt(math.pi) / math.gamma(alpha / 2.0)


def _params(p) -> HfbmParams:
    return p if isinstance(p, HfbmParams) else HfbmParams(float(p))


def hfbm_cov(params, s, t):
    """Covariance of B(s) and B(t) for s, t > 0; broadcasts over arrays."""
    params = _params(params)
    s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if np.any(~(s_arr > 0)) or np.any(~(t_arr > 0)):
        raise DomainError("hfbm_cov needs strictly positive times")
    lo = np.array(np.minimum(s_arr, t_arr), dtype=float, ndmin=1)
    hi = np.array(np.maximum(s_arr, t_arr), dtype=float, ndmin=1)
    if params.is_brownian:
        out = lo
    else:
        alpha = params.alpha
        out = hi.copy()  # diagonal: sigma(t, t) = t
        off = hi > lo
        if off.any():
            z = np.log(hi[off] / lo[off])
            psi = tricomi_psi((1.0 - alpha) / 2.0, 1.0 - alpha, z)
            out[off] = c_alpha(alpha) * lo[off] * psi
    return float(out[0]) if s_arr.ndim == 0 else out.reshape(s_arr.shape)


def increment_variance(params, s, t):
    """E[(B(t) - B(s))^2] for 0 <= s <= t; broadcasts over arrays."""
    params = _params(params)
    s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if np.any(s_arr < 0) or np.any(s_arr > t_arr):
        raise DomainError("increment_variance needs 0 <= s <= t")
    shape = s_arr.shape
    s_arr, t_arr = np.atleast_1d(s_arr), np.atleast_1d(t_arr)
    out = np.zeros(s_arr.shape)
    from_zero = s_arr == 0
    out[from_zero] = t_arr[from_zero]
    inner = (s_arr > 0) & (t_arr > s_arr)
    if inner.any():
        s_in, t_in = s_arr[inner], t_arr[inner]
        out[inner] = t_in + s_in - 2.0 * np.asarray(hfbm_cov(params, s_in, t_in))
    return float(out[0]) if len(shape) == 0 else out.reshape(shape)


def cholesky_psd(matrix: np.ndarray):
    """Lower Cholesky factor, retrying with growing diagonal jitter.

    Returns (factor, jitter).  Raises NumericalError when the matrix is not
    positive semidefinite up to the largest jitter level.
    """
    n = matrix.shape[0]
    scale = np.trace(matrix) / n if n else 0.0
    for level in _JITTER:
        jitter = level * scale
        try:
            return np.linalg.cholesky(matrix + jitter * np.eye(n)), jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("covariance matrix is not positive semidefinite")


def cov_matrix(params, grid) -> CovMatrix:
    """Covariance matrix on ``grid``; a t = 0 entry gets a zero row/column."""
    params = _params(params)
    grid = validate_grid(grid)
    n = grid.size
    entries = np.zeros((n, n))
    pos = np.flatnonzero(grid > 0)
    tp = grid[pos]
    if tp.size:
        block = hfbm_cov(params, tp[:, None], tp[None, :])
        block = 0.5 * (block + block.T)
        entries[np.ix_(pos, pos)] = block
        factor_block, jitter = cholesky_psd(block)
    else:
        factor_block, jitter = np.zeros((0, 0)), 0.0
    factor = np.zeros((n, n))
    factor[np.ix_(pos, pos)] = factor_block
    return CovMatrix(grid, entries, factor, jitter)


def sample_hfbm(params, grid, ensemble_size: int, seed: int) -> Ensemble:
    """Exact Gaussian paths: each row is L z with L the Cholesky factor."""
    params = _params(params)
    if ensemble_size < 1:
        raise DomainError("ensemble_size must be >= 1")
    cov = cov_matrix(params, grid)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((ensemble_size, cov.grid.size))
    values = z @ cov.factor.T
    return Ensemble(cov.grid, values, {"process": "hfbm", "alpha": params.alpha, "seed": seed})


def lemma_checks(alpha: float, n_triples: int = 10_000, seed: int = 20240,
                 tol: float = 1e-10, t_max: float = 5.0) -> dict:
    """Check the increment-variance properties on random triples r <= s <= t.

    Returns {property: (passed, total)} for: non-negativity, super-additivity,
    the two monotonicity relations, small-increment vanishing and
    rho(0, t) = t.
    """
    params = _params(alpha)
    rng = np.random.default_rng(seed)
    r, s, t = np.sort(rng.uniform(0.0, t_max, size=(3, n_triples)), axis=0)
    # part of the triples start at the origin
    r[rng.random(n_triples) < 0.05] = 0.0
    rho = lambda a, b: np.asarray(increment_variance(params, a, b))
    rho_rs, rho_st, rho_rt = rho(r, s), rho(s, t), rho(r, t)
    h = 1e-6
    rho_small = rho(t, t + h)
    results = {
        "rho(0,0) = 0": (int(increment_variance(params, 0.0, 0.0) == 0.0), 1),
        "non-negative": (int(np.sum(np.minimum(rho_rs, np.minimum(rho_st, rho_rt)) >= -tol)), n_triples),
        "super-additive": (int(np.sum(rho_rs + rho_st <= rho_rt + tol)), n_triples),
        "monotone in right end": (int(np.sum(rho_rs <= rho_rt + tol)), n_triples),
        "monotone in left end": (int(np.sum(rho_st <= rho_rt + tol)), n_triples),
        "small increments vanish": (int(np.sum(rho_small <= 1e-3)), n_triples),
        "rho(0,t) = t": (int(np.sum(rho(np.zeros_like(t), t) == t)), n_triples),
    }
    return results
