"""Response functions of the shot-noise processes.

Two families are provided, both with exponent beta in (0, 1/2):

* ``log``:  g(t, u) = (log t - log u)_+^beta  (depends on t/u only)
* ``poly``: g(t, u) = (t - u)_+^beta          (depends on t - u only)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FAMILIES = ("log", "poly")


@dataclass(frozen=True)
class Kernel:
    family: str
    beta: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not 0.0 < self.beta < 0.5:
            raise DomainError(f"beta must lie in (0, 1/2), got {self.beta!r}")

    def __call__(self, t, u):
        return eval_kernel(self, t, u)

    def lag(self, t, u):
        """The kernel's lag variable: log(t/u) or t - u (may be negative)."""
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.family == "log":
            return np.log(t) - np.log(u)
        return t - u


def log_kernel(beta: float) -> Kernel:
    return Kernel("log", beta)


def poly_kernel(beta: float) -> Kernel:
    return Kernel("poly", beta)


def eval_kernel(kernel: Kernel, t, u):
    """g(t, u) >= 0 for t, u > 0; zero whenever t <= u. Broadcasts."""
    t_arr = np.asarray(t, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any(~(t_arr > 0)) or np.any(~(u_arr > 0)):
        raise DomainError("kernel arguments must be strictly positive")
    x = kernel.lag(t_arr, u_arr)
    out = np.where(x > 0, np.abs(x) ** kernel.beta, 0.0)
    if out.ndim == 0:
        return float(out)
    return out
