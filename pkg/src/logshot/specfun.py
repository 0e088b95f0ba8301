"""Gamma, Kummer and Tricomi confluent hypergeometric functions.

Tricomi's function is evaluated from its Laplace-type integral

    Psi(a, b; z) = 1/Gamma(a) * int_0^inf exp(-s z) s^(a-1) (1+s)^(b-a-1) ds,

valid for a > 0, z >= 0.  For a <= 0 the Kummer transformation

    Psi(a, b; z) = z^(1-b) Psi(a+1-b, 2-b; z)

moves the first parameter into the positive range first.  At z = 0 with
b < 0 the closed-form limit Gamma(1-b)/Gamma(a-b+1) is returned.

The integral is computed in the variable v = log(s), where the integrand
exp(a v - z e^v) (1+e^v)^(b-a-1) is smooth on the whole line and decays
exponentially at both ends.  A composite 15-point Gauss-Kronrod rule is
applied on a truncated window, doubling the panel count until successive
estimates agree.  Everything is vectorized over z.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import AccuracyError, DomainError

__all__ = [
    "PsiArgs",
    "ln_gamma",
    "kummer_phi",
    "tricomi_psi",
    "tricomi_psi_series",
    "tricomi_psi_derivative",
]

# 15-point Kronrod extension of the 7-point Gauss-Legendre rule on [-1, 1].
# Nodes are listed from the outside in; the last one is the centre.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[[13, 11, 9]] = _WG[:3]

_RTOL = 1e-14
_MIN_PANELS = 16
_MAX_PANELS = 4096
# Integrand values below exp(-_CUTOFF) times the peak are dropped.
_CUTOFF = 42.0
# Left of this point e^v < 1e-16, so the integrand is exp(a v) to full
# precision and its tail integrates in closed form to exp(a v)/a.
_V_TAIL = -37.0
_CHUNK = 256


class PsiArgs(NamedTuple):
    a: float
    b: float
    z: float


def ln_gamma(x: float) -> float:
    """Natural logarithm of Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def _is_integer(x: float) -> bool:
    return float(x).is_integer()


def kummer_phi(a: float, b: float, z: float, *, rtol: float = 1e-15,
               max_terms: int = 10_000) -> float:
    """Kummer's function Phi(a, b; z) = sum_l (a)_l / (b)_l z^l / l!.

    Summed directly; meant for moderate |z| (say |z| <= 30).  The series
    is stopped once the terms are past their peak and the last two
    terms are both below ``rtol`` relative to the partial sum.
    """
    if b <= 0 and _is_integer(b):
        raise DomainError(f"kummer_phi undefined for non-positive integer b={b!r}")
    term = 1.0
    total = 1.0
    small = 0
    for l in range(max_terms):
        term *= (a + l) / (b + l) * z / (l + 1)
        total += term
        if term == 0.0:
            return total
        if l + 1 > abs(z) and abs(term) <= rtol * abs(total):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise AccuracyError(
        f"kummer_phi({a}, {b}, {z}) did not converge in {max_terms} terms")


def tricomi_psi_series(a: float, b: float, z: float) -> float:
    """Psi(a, b; z) from the two-Kummer-function connection formula.

    Only used as a cross-check for small |z|; the two terms cancel
    increasingly as z grows.  Requires b not an integer.
    """
    if _is_integer(b):
        raise DomainError(f"series branch needs non-integer b, got {b!r}")
    if z < 0:
        raise DomainError(f"z must be >= 0, got {z!r}")
    first = math.gamma(1 - b) / math.gamma(1 + a - b) * kummer_phi(a, b, z)
    if z == 0:
        # z^(1-b) factor of the second Kummer term
        if b < 1:
            return first
        raise DomainError("series branch at z = 0 diverges for b > 1")
    second = (math.gamma(b - 1) / math.gamma(a) * z ** (1 - b)
              * kummer_phi(1 + a - b, 2 - b, z))
    return first + second


def _log_integrand(v, a, b, z):
    # log of exp(a v - z e^v) (1 + e^v)^(b-a-1); v and z broadcast
    return a * v - z * np.exp(v) + (b - a - 1.0) * np.logaddexp(0.0, v)


def _window(a, b, z):
    """Integration window [lo, hi] in v = log s and the log-peak, per z."""
    # Beyond v_up the factor exp(-z e^v) dominates every algebraic term.
    # Left of _V_TAIL the integrand is increasing, so the peak is inside.
    grow = max(b - 1.0, 0.0) + abs(b - a - 1.0)
    v_up = np.log((4 * _CUTOFF + 8.0 * grow * (1.0 + np.abs(np.log(z)))) / z)
    v_up = np.maximum(v_up, _V_TAIL + 2.0)
    scan = np.linspace(0.0, 1.0, 257)
    v = _V_TAIL + (v_up - _V_TAIL)[:, None] * scan[None, :]
    logh = _log_integrand(v, a, b, z[:, None])
    peak = logh.max(axis=1)
    keep = logh >= (peak - _CUTOFF)[:, None]
    idx = np.arange(scan.size)
    first = np.where(keep, idx, scan.size).min(axis=1)
    last = np.where(keep, idx, -1).max(axis=1)
    step = (v_up - _V_TAIL) / (scan.size - 1)
    lo = _V_TAIL + np.maximum(first - 1, 0) * step
    hi = _V_TAIL + np.minimum(last + 1, scan.size - 1) * step
    return lo, hi, peak


def _gk_panels(a, b, z, lo, hi, peak, panels):
    """Composite Kronrod and Gauss estimates of the scaled integral."""
    width = (hi - lo) / panels
    centres = lo[:, None] + width[:, None] * (np.arange(panels) + 0.5)
    v = centres[:, :, None] + 0.5 * width[:, None, None] * _NODES
    h = np.exp(_log_integrand(v, a, b, z[:, None, None]) - peak[:, None, None])
    kron = 0.5 * width * np.einsum("ijk,k->i", h, _KRONROD_W)
    gauss = 0.5 * width * np.einsum("ijk,k->i", h, _GAUSS_W)
    return kron, gauss


def _psi_positive_a(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """Psi for a > 0 and z > 0 (1-d array) by quadrature."""
    out = np.empty_like(z)
    for start in range(0, z.size, _CHUNK):
        zc = z[start:start + _CHUNK]
        lo, hi, peak = _window(a, b, zc)
        panels = _MIN_PANELS
        prev, _ = _gk_panels(a, b, zc, lo, hi, peak, panels)
        result = np.full(zc.shape, np.nan)
        todo = np.ones(zc.shape, dtype=bool)
        while todo.any():
            panels *= 2
            if panels > _MAX_PANELS:
                raise AccuracyError(
                    f"Psi({a}, {b}; z) quadrature did not converge for "
                    f"z={zc[todo][:3]}")
            sel = np.flatnonzero(todo)
            kron, gauss = _gk_panels(a, b, zc[sel], lo[sel], hi[sel], peak[sel], panels)
            done = (np.abs(kron - prev[sel]) <= _RTOL * np.abs(kron)) & \
                   (np.abs(kron - gauss) <= 1e3 * _RTOL * np.abs(kron) + 1e-300)
            result[sel[done]] = kron[done]
            prev[sel] = kron
            todo[sel[done]] = False
        # closed-form left tail; zero when the window stops short of it
        tail = np.where(lo <= _V_TAIL, np.exp(a * _V_TAIL - peak) / a, 0.0)
        log_norm = peak - math.lgamma(a)
        out[start:start + _CHUNK] = (result + tail) * np.exp(log_norm)
    return out


def _psi_at_zero(a, b):
    # Gamma(1-b) / Gamma(a-b+1); the reciprocal gamma vanishes at poles
    c = a - b + 1
    if c <= 0 and _is_integer(c):
        return 0.0
    return math.gamma(1 - b) / math.gamma(c)


def tricomi_psi(a: float, b: float, z):
    """Tricomi's confluent hypergeometric function Psi(a, b; z), z >= 0.

    ``z`` may be a scalar or an array; the result has the same shape.
    Relative accuracy is about 1e-13 over the parameter ranges used in
    this package.
    """
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr).ravel()
    if np.any(~np.isfinite(z_arr)) or np.any(z_arr < 0):
        raise DomainError("z must be finite and >= 0")
    out = np.empty_like(z_arr)

    at_zero = z_arr == 0
    if at_zero.any():
        if not b < 0:
            raise DomainError(f"Psi(a, b; 0) is only provided for b < 0, got b={b!r}")
        out[at_zero] = _psi_at_zero(a, b)

    pos = ~at_zero
    if pos.any():
        zp = z_arr[pos]
        if a > 0:
            out[pos] = _psi_positive_a(a, b, zp)
        else:
            a2, b2 = a + 1 - b, 2 - b
            if not a2 > 0:
                raise DomainError(
                    f"Psi({a}, {b}; z): transformed first parameter {a2} is not positive")
            out[pos] = zp ** (1 - b) * _psi_positive_a(a2, b2, zp)
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(z))


def tricomi_psi_derivative(a: float, b: float, z):
    """d/dz Psi(a, b; z) = -a Psi(a+1, b+1; z)."""
    if a == 0:
        return 0.0 if np.ndim(z) == 0 else np.zeros(np.shape(z))
    return -a * tricomi_psi(a + 1, b + 1, z)
