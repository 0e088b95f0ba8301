"""Finite-time covariances, Monte Carlo estimators and limit diagnostics.

Closed forms for the logarithmic kernel g(t/u) = log^beta(t/u) 1{t >= u}:

* constant variance K2:
      Cov(S(s), S(t)) = Gamma(beta+1) s K2 lam Psi(-beta, -2beta; log(t/s))
* K_2(u) = K + u^-gamma:
      Gamma(beta+1) s lam [K Psi(-beta, -2beta; L)
                           + (1-gamma)^(-2beta-1) s^-gamma Psi(-beta, -2beta; (1-gamma) L)]
* K_2(u) = K - gamma log u:
      Gamma(beta+1) lam s K_2(s) Psi(-beta, -2beta; L)
      + Gamma(beta+2) lam s gamma Psi(-beta, -2beta-1; L)

with 0 < s <= t and L = log(t/s).  ``cov_quadrature`` integrates
lam * int g(t/u) g(s/u) K_2(u) du directly and is the independent check.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
import math
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError
from .hfbm import HfbmParams, cov_matrix
from .kernels import Kernel
from .noise import (BoundedPowerLawVariance, IndependentConstant, LogDecayVariance,
                    NoiseModel, PowerLawVariance)
from .shotnoise import Ensemble, SamplePath, SimConfig, simulate_ensemble, validate_grid
from .specfun import tricomi_psi


class UnsupportedModelError(DomainError):
    """The requested quantity is not available for this noise model."""


@dataclass
class EstimatorReport:
    quantity: str
    estimate: float
    std_error: float
    n_samples: int
    target: Optional[float] = None
    z_score: Optional[float] = None

    def __post_init__(self):
        if self.target is not None and self.z_score is None:
            diff = self.estimate - self.target
            if self.std_error > 0:
                self.z_score = diff / self.std_error
            else:
                self.z_score = 0.0 if diff == 0 else math.copysign(math.inf, diff)


@dataclass
class ConvergenceReport:
    alpha: float
    grid: list
    scales: list
    target: list
    empirical: list = field(default_factory=list)
    max_abs: list = field(default_factory=list)
    frobenius: list = field(default_factory=list)
    skewness: list = field(default_factory=list)
    excess_kurtosis: list = field(default_factory=list)
    variance_z: list = field(default_factory=list)
    ensemble_size: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _check_beta(beta):
    if not 0.0 < beta < 0.5:
        raise DomainError(f"beta must lie in (0, 1/2), got {beta!r}")


def _ordered(s, t):
    s_arr, t_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    if np.any(~(s_arr > 0)) or np.any(~(t_arr > 0)):
        raise DomainError("covariance times must be strictly positive")
    return np.minimum(s_arr, t_arr), np.maximum(s_arr, t_arr)


def _scalar(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _psi(a, b, z):
    z = np.asarray(z, dtype=float)
    return np.asarray(tricomi_psi(a, b, z.ravel())).reshape(z.shape)


def cov_closed_form_independent(beta, lam, k2, s, t):
    """Cov(S(s), S(t)) for amplitudes with constant variance ``k2``."""
    _check_beta(beta)
    lo, hi = _ordered(s, t)
    psi = _psi(-beta, -2 * beta, np.log(hi / lo))
    return _scalar(math.gamma(beta + 1) * lo * k2 * lam * psi)


def cov_closed_form_powerlaw(beta, lam, K, gamma, s, t):
    """Cov(S(s), S(t)) for K_2(u) = K + u^-gamma."""
    _check_beta(beta)
    if not 0.0 <= gamma < 1.0:
        raise DomainError(f"gamma must lie in [0, 1), got {gamma!r}")
    lo, hi = _ordered(s, t)
    L = np.log(hi / lo)
    first = K * _psi(-beta, -2 * beta, L)
    second = (1 - gamma) ** (-2 * beta - 1) * lo ** (-gamma) * _psi(-beta, -2 * beta, (1 - gamma) * L)
    return _scalar(math.gamma(beta + 1) * lo * lam * (first + second))


def cov_closed_form_logdecay(beta, lam, K, gamma, s, t):
    """Cov(S(s), S(t)) for K_2(u) = K - gamma log u (needs K_2(min(s, t)) > 0)."""
    _check_beta(beta)
    lo, hi = _ordered(s, t)
    k2_lo = K - gamma * np.log(lo)
    if np.any(k2_lo <= 0):
        raise DomainError("K - gamma log s must be positive")
    L = np.log(hi / lo)
    out = (math.gamma(beta + 1) * lam * lo * k2_lo * _psi(-beta, -2 * beta, L)
           + math.gamma(beta + 2) * lam * lo * gamma * _psi(-beta, -2 * beta - 1, L))
    return _scalar(out)


def cov_closed_form(beta, noise: NoiseModel, lam, s, t):
    """Dispatch to the closed form matching ``noise``."""
    if isinstance(noise, IndependentConstant):
        return cov_closed_form_independent(beta, lam, noise.k2_value, s, t)
    if isinstance(noise, PowerLawVariance):
        return cov_closed_form_powerlaw(beta, lam, noise.K, noise.gamma, s, t)
    if isinstance(noise, LogDecayVariance):
        return cov_closed_form_logdecay(beta, lam, noise.K, noise.gamma, s, t)
    raise UnsupportedModelError(f"no closed-form covariance for {noise.name!r} noise")


def _quad(f, a, b, **kw):
    value, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=500, **kw)
    return value


def cov_quadrature(beta, noise: NoiseModel, lam, s, t) -> float:
    """lam * int_0^min g(t/u) g(s/u) K_2(u) du for the log kernel, by quadrature.

    With u = s e^-w the integral becomes
    lam s int_0^inf w^beta (w + L)^beta K_2(s e^-w) e^-w dw.
    """
    _check_beta(beta)
    lo, hi = (float(x) for x in _ordered(s, t))
    L = math.log(hi / lo)
    noise.k2(lo)  # admissibility of the support

    def k2e(w):
        # K_2(lo e^-w) e^-w; beyond w = 700 the factor e^-w underflows
        if w > 700.0:
            return 0.0
        return noise.k2(lo * math.exp(-w)) * math.exp(-w)

    if L == 0.0:
        head = _quad(k2e, 0.0, 1.0, weight="alg", wvar=(2 * beta, 0.0))
        tail = _quad(lambda w: w ** (2 * beta) * k2e(w), 1.0, math.inf)
        return lam * lo * (head + tail)
    # (w + L)^beta varies on the scale L near the origin
    cut = min(1.0, L)
    f = lambda w: (w + L) ** beta * k2e(w)
    total = _quad(f, 0.0, cut, weight="alg", wvar=(beta, 0.0))
    if cut < 1.0:
        total += _quad(lambda w: w ** beta * f(w), cut, 1.0)
    total += _quad(lambda w: w ** beta * f(w), 1.0, math.inf)
    return lam * lo * total


def cov_poly_numeric(beta, lam, k2, s, t) -> float:
    """Cov(X(s), X(t)) = lam k2 int_0^min (s-x)^beta (t-x)^beta dx for the poly kernel."""
    _check_beta(beta)
    lo, hi = (float(x) for x in _ordered(s, t))
    if hi == lo:
        return lam * k2 * lo ** (2 * beta + 1) / (2 * beta + 1)
    # (lo - x)^beta is handled as an algebraic endpoint weight
    val = _quad(lambda x: (hi - x) ** beta, 0.0, lo, weight="alg", wvar=(0.0, beta))
    return lam * k2 * val


def autocorrelation_closed_form(beta, t, tau):
    """Corr(S(t), S(t + tau)) for constant-variance amplitudes."""
    _check_beta(beta)
    t_arr, tau_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(tau, dtype=float))
    if np.any(~(t_arr > 0)) or np.any(tau_arr < 0):
        raise DomainError("need t > 0 and tau >= 0")
    ratio = 1.0 + tau_arr / t_arr
    const = math.gamma(beta + 1) / math.gamma(2 * beta + 1)
    out = const * ratio ** -0.5 * _psi(-beta, -2 * beta, np.log(ratio))
    return _scalar(out)


def empirical_cov(ensemble, s: float, t: float, target: Optional[float] = None) -> EstimatorReport:
    """Unbiased sample covariance of the path values at s and t."""
    if isinstance(ensemble, Ensemble):
        x, y = ensemble.column(s), ensemble.column(t)
    else:
        paths = list(ensemble)
        x = np.array([p.at(s) for p in paths])
        y = np.array([p.at(t) for p in paths])
    M = x.size
    if M < 2:
        raise DomainError("need at least two paths")
    dx, dy = x - x.mean(), y - y.mean()
    prod = dx * dy
    estimate = float(prod.sum() / (M - 1))
    std_error = float(prod.std(ddof=1) / math.sqrt(M))
    return EstimatorReport(f"cov({s:g},{t:g})", estimate, std_error, M, target)


def _qv_grid(T, n):
    if not T > 0:
        raise DomainError("T must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    return T * np.arange(n + 1) / n


@lru_cache(maxsize=32)
def _poly_unit_increments(beta: float, n: int) -> np.ndarray:
    """E[(X(k) - X(k-1))^2] / (lam K2) on the unit grid, k = 1..n.

    Equals int_0^(k-1) ((1+v)^beta - v^beta)^2 dv + 1/(2 beta + 1).
    """
    pieces = np.empty(max(n - 1, 0))
    for j in range(n - 1):
        pieces[j] = _quad(lambda v: ((1 + v) ** beta - v ** beta) ** 2, j, j + 1)
    past = np.concatenate([[0.0], np.cumsum(pieces)])
    return past + 1.0 / (2 * beta + 1)


def _constant_k2(noise) -> float:
    if isinstance(noise, NoiseModel):
        if not noise.constant:
            raise UnsupportedModelError("quadratic variation needs constant-variance amplitudes")
        return noise.k2_value
    k2 = float(noise)
    if not k2 > 0:
        raise DomainError("K2 must be > 0")
    return k2


def expected_increments(kernel: Kernel, lam, noise, T, n) -> np.ndarray:
    """E[(S(t_k) - S(t_{k-1}))^2] on the uniform grid t_k = T k / n."""
    k2 = _constant_k2(noise)
    beta = kernel.beta
    grid = _qv_grid(T, n)
    if kernel.family == "log":
        s, t = grid[:-1], grid[1:]
        out = np.empty(n)
        out[0] = lam * k2 * math.gamma(2 * beta + 1) * t[0]
        if n > 1:
            psi = _psi(-beta, -2 * beta, np.log(t[1:] / s[1:]))
            out[1:] = lam * k2 * (math.gamma(2 * beta + 1) * (t[1:] + s[1:])
                                  - 2 * math.gamma(beta + 1) * s[1:] * psi)
        return out
    h = T / n
    return lam * k2 * h ** (2 * beta + 1) * _poly_unit_increments(beta, n)


def expected_qv(kernel: Kernel, lam, noise, T, n) -> float:
    """Sum over the n steps of E[increment^2] on the uniform grid of [0, T]."""
    return float(np.sum(expected_increments(kernel, lam, noise, T, n)))


def empirical_qv(path: SamplePath) -> float:
    """Realized quadratic variation sum (x_k - x_{k-1})^2 on a uniform grid."""
    grid = np.asarray(path.grid, dtype=float)
    steps = np.diff(grid)
    if steps.size and not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise DomainError("empirical_qv needs a uniform grid")
    return float(np.sum(np.diff(path.values) ** 2))


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def _check_limit_hypotheses(alpha, noise: NoiseModel):
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (1, 2), got {alpha!r}")
    if noise.limit is None or not noise.limit > 0:
        raise DomainError(f"{noise.name!r} noise has no positive limiting variance")
    if not noise.bounded:
        raise DomainError(f"{noise.name!r} noise has unbounded conditional variance")
    if not math.isfinite(noise.kurtosis_ratio()):
        raise DomainError("unbounded kurtosis ratio")


def _moments(values: np.ndarray):
    centred = values - values.mean(axis=0)
    m2 = np.mean(centred ** 2, axis=0)
    m3 = np.mean(centred ** 3, axis=0)
    m4 = np.mean(centred ** 4, axis=0)
    safe = np.where(m2 > 0, m2, 1.0)
    skew = np.where(m2 > 0, m3 / safe ** 1.5, 0.0)
    kurt = np.where(m2 > 0, m4 / safe ** 2 - 3.0, 0.0)
    return skew, kurt, m2, m4


def convergence_report(alpha: float, lam: float, noise: NoiseModel, grid,
                       scales: Sequence[float], ensemble_size: int, seed: int,
                       workers: int = 1) -> ConvergenceReport:
    """Distance between the scaled process and the H-fBm covariance, per scale c."""
    _check_limit_hypotheses(alpha, noise)
    grid = validate_grid(grid)
    if grid[0] <= 0:
        raise DomainError("the convergence grid must be strictly positive")
    target = cov_matrix(HfbmParams(alpha), grid).entries
    kernel = Kernel("log", (alpha - 1) / 2)
    report = ConvergenceReport(alpha, grid.tolist(), [float(c) for c in scales],
                               target.tolist(), ensemble_size=ensemble_size, seed=seed)
    for c in scales:
        config = SimConfig(kernel, noise, lam, grid, seed=seed, ensemble_size=ensemble_size,
                           scale_c=float(c), alpha=alpha, K=noise.limit)
        ens = simulate_ensemble(config, workers=workers)
        emp = np.cov(ens.values, rowvar=False, ddof=1).reshape(grid.size, grid.size)
        diff = emp - target
        skew, kurt, m2, m4 = _moments(ens.values)
        var_se = np.sqrt(np.maximum(m4 - m2 ** 2, 0.0) / ensemble_size)
        report.empirical.append(emp.tolist())
        report.max_abs.append(float(np.max(np.abs(diff))))
        report.frobenius.append(float(np.linalg.norm(diff)))
        report.skewness.append(skew.tolist())
        report.excess_kurtosis.append(kurt.tolist())
        report.variance_z.append(((np.diag(emp) - grid) / var_se).tolist())
    return report
