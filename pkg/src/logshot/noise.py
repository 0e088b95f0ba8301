"""Conditional laws of the shot amplitudes given their arrival time.

Every model is centred (K_1 = 0) with a time-dependent conditional variance
K_2(u).  The amplitude law is either Gaussian N(0, K_2(u)) or Rademacher
+-sqrt(K_2(u)).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError

LAWS = ("gaussian", "rademacher")


@dataclass(frozen=True)
class NoiseModel:
    """Base class; subclasses define ``_variance``.

    ``limit`` is lim_{u -> inf} K_2(u) when it exists and is positive,
    ``bounded`` tells whether K_2 is bounded on (0, inf).
    """

    law: str = field(default="gaussian", kw_only=True)

    limit = None
    bounded = True
    name = "noise"

    def __post_init__(self):
        if self.law not in LAWS:
            raise DomainError(f"unknown amplitude law {self.law!r}; expected one of {LAWS}")

    @property
    def horizon(self) -> float:
        return math.inf

    @property
    def constant(self) -> bool:
        return False

    def _variance(self, u):
        raise NotImplementedError

    def k2(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any(~(u_arr > 0)):
            raise DomainError("noise is defined for arrival times u > 0")
        if np.any(u_arr > self.horizon):
            raise DomainError(
                f"{self.name}: u beyond the admissible horizon {self.horizon!r}")
        out = self._variance(u_arr)
        return float(out) if out.ndim == 0 else out

    def k4(self, u):
        v = np.asarray(self.k2(u))
        out = 3.0 * v * v if self.law == "gaussian" else v * v
        return float(out) if out.ndim == 0 else out

    def kurtosis_ratio(self) -> float:
        """sup_u K_4(u) / K_2(u)^2."""
        return 3.0 if self.law == "gaussian" else 1.0

    def sample(self, u, rng: np.random.Generator):
        """One amplitude per entry of ``u``, drawn from ``rng``."""
        sd = np.sqrt(np.asarray(self.k2(u)))
        shape = np.shape(sd)
        if self.law == "gaussian":
            out = sd * rng.standard_normal(shape)
        else:
            signs = 2.0 * rng.integers(0, 2, size=shape) - 1.0
            out = sd * signs
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class IndependentConstant(NoiseModel):
    """Amplitudes independent of the epochs: K_2(u) = k2."""

    k2_value: float = 1.0
    name = "const"

    def __post_init__(self):
        super().__post_init__()
        if not self.k2_value > 0:
            raise DomainError(f"k2 must be > 0, got {self.k2_value!r}")

    @property
    def limit(self):
        return self.k2_value

    @property
    def constant(self) -> bool:
        return True

    def _variance(self, u):
        return np.full(np.shape(u), float(self.k2_value))


@dataclass(frozen=True)
class PowerLawVariance(NoiseModel):
    """K_2(u) = K + u^(-gamma), gamma in [0, 1). Unbounded as u -> 0."""

    K: float = 1.0
    gamma: float = 0.5
    name = "powerlaw"
    bounded = False

    def __post_init__(self):
        super().__post_init__()
        if not self.K > 0:
            raise DomainError(f"K must be > 0, got {self.K!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise DomainError(f"gamma must lie in [0, 1), got {self.gamma!r}")

    @property
    def limit(self):
        return self.K

    def _variance(self, u):
        return self.K + u ** (-self.gamma)


@dataclass(frozen=True)
class LogDecayVariance(NoiseModel):
    """K_2(u) = K - gamma log u, only while it stays positive.

    ``horizon`` is the largest admissible arrival time; it must satisfy
    K - gamma log(horizon) > 0.  No positive limit exists.
    """

    K: float = 1.0
    gamma: float = 0.5
    horizon_value: float = 1.0
    name = "logdecay"
    bounded = False

    def __post_init__(self):
        super().__post_init__()
        if not self.K > 0:
            raise DomainError(f"K must be > 0, got {self.K!r}")
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be >= 0, got {self.gamma!r}")
        if not self.horizon_value > 0:
            raise DomainError("horizon must be > 0")
        if not self.K - self.gamma * math.log(self.horizon_value) > 0:
            raise DomainError(
                f"K_2 = K - gamma log u turns non-positive before the horizon "
                f"{self.horizon_value!r} (bound: u < {self.positivity_bound():.6g})")

    def positivity_bound(self) -> float:
        return math.inf if self.gamma == 0 else math.exp(self.K / self.gamma)

    @property
    def horizon(self) -> float:
        return self.horizon_value

    def _variance(self, u):
        return self.K - self.gamma * np.log(u)


@dataclass(frozen=True)
class BoundedPowerLawVariance(NoiseModel):
    """K_2(u) = K + (1 + u)^(-gamma): bounded, with limit K."""

    K: float = 1.0
    gamma: float = 0.5
    name = "bounded-powerlaw"

    def __post_init__(self):
        super().__post_init__()
        if not self.K > 0:
            raise DomainError(f"K must be > 0, got {self.K!r}")
        if not self.gamma > 0:
            raise DomainError(f"gamma must be > 0, got {self.gamma!r}")

    @property
    def limit(self):
        return self.K

    def _variance(self, u):
        return self.K + (1.0 + u) ** (-self.gamma)


def k2(model: NoiseModel, u):
    return model.k2(u)


def k4(model: NoiseModel, u):
    return model.k4(u)


def sample_noise(model: NoiseModel, u, rng: np.random.Generator):
    return model.sample(u, rng)
