"""Diffusion law (1+u)^(-p) and the primitives derived from it.

The cell flux and every monitored functional are built from the
diffusion coefficient and three anchored primitives of it:

* ``B_eval``       integral of the coefficient from 1 to u,
* ``b_prime_eval`` integral of coefficient/r from 1 to u,
* ``b_eval``       integral of ``b_prime`` from 1 to u,

so that b(1) = b'(1) = 0 and b''(u) = a(u)/u, the convexity structure
the Lyapunov-type functionals rely on.  Closed forms are hard-wired for
p in {0, 1}; other exponents fall back to adaptive quadrature, with an
optional log-spaced interpolation table for fast vectorized evaluation
along trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import DomainError, QuadratureError

#: Roundoff guard for the singular primitives: evaluation points below this
#: are clamped to it.  Solutions are positive, so the clamp only absorbs
#: vacuum-level roundoff; callers flag clamped evaluations separately.
U_FLOOR = 1e-12

_LOG2 = math.log(2.0)

# Range of the cached b' table (in u); values outside fall back to
# direct quadrature per point.
_TABLE_LOG_MIN = math.log(U_FLOOR)
_TABLE_LOG_MAX = -math.log(U_FLOOR) + 2.0 * _LOG2
_TABLE_POINTS = 4097


@dataclass(frozen=True)
class DiffusionModel:
    """Diffusion coefficient family (1+u)^(-p), immutable after construction.

    p = 1 is the critical exponent; p < 1 is subcritical, p > 1
    supercritical.  quadrature_tol is the relative tolerance used when a
    primitive has no closed form.
    """

    p: float
    quadrature_tol: float = 1e-12

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and math.isfinite(self.p)):
            raise DomainError(f"p must be a finite real, got {self.p!r}")
        if self.p < 0:
            raise DomainError(f"p must be nonnegative, got {self.p}")
        if not (0.0 < self.quadrature_tol <= 1e-4):
            raise DomainError(
                f"quadrature_tol must lie in (0, 1e-4], got {self.quadrature_tol}"
            )


def _checked(u, *, positive: bool):
    """Return u as a float array, validating finiteness and sign."""
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("u must be finite")
    if positive:
        if np.any(arr <= 0.0):
            raise DomainError("u must be positive")
    elif np.any(arr < 0.0):
        raise DomainError("u must be nonnegative")
    return arr


def _maybe_scalar(value, u):
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(value)
    return value


def a_eval(model: DiffusionModel, u):
    """Diffusion coefficient (1+u)^(-p); accepts scalars or arrays."""
    arr = _checked(u, positive=False)
    p = model.p
    if p == 0.0:
        out = np.ones_like(arr)
    elif p == 1.0:
        out = 1.0 / (1.0 + arr)
    else:
        out = (1.0 + arr) ** (-p)
    return _maybe_scalar(out, u)


def a_prime_eval(model: DiffusionModel, u):
    """Derivative of the diffusion coefficient, -p(1+u)^(-p-1)."""
    arr = _checked(u, positive=False)
    p = model.p
    if p == 0.0:
        out = np.zeros_like(arr)
    else:
        out = -p * (1.0 + arr) ** (-p - 1.0)
    return _maybe_scalar(out, u)


def B_eval(model: DiffusionModel, u):
    """Integral of the diffusion coefficient from 1 to u (negative for u < 1)."""
    arr = _checked(u, positive=True)
    p = model.p
    if p == 1.0:
        out = np.log1p(arr) - _LOG2
    else:
        q = 1.0 - p
        out = ((1.0 + arr) ** q - 2.0**q) / q
    return _maybe_scalar(out, u)


def _b_prime_integrand(s: float, p: float) -> float:
    # a(e^s): integrating a(r)/r dr in log coordinates keeps the
    # integrand smooth and bounded all the way down to vacuum.
    return (1.0 + math.exp(s)) ** (-p)


def _quad_checked(fn, lo: float, hi: float, tol: float, args=()) -> float:
    res = quad(fn, lo, hi, args=args, epsabs=0.0, epsrel=tol, limit=200, full_output=1)
    if len(res) > 3:
        raise QuadratureError(f"quadrature did not converge on [{lo}, {hi}]: {res[3]}")
    return res[0]


def _b_prime_quad(p: float, tol: float, u: float) -> float:
    if u == 1.0:
        return 0.0
    return _quad_checked(_b_prime_integrand, 0.0, math.log(u), tol, args=(p,))


@lru_cache(maxsize=16)
def _b_prime_table(p: float, tol: float) -> CubicSpline:
    """Cubic spline of b' on a log-spaced grid, built once per (p, tol)."""
    s = np.linspace(_TABLE_LOG_MIN, _TABLE_LOG_MAX, _TABLE_POINTS)
    vals = np.empty_like(s)
    # cumulative segment quadrature anchored at u = 1 (s = 0)
    i0 = int(np.searchsorted(s, 0.0))
    acc = _quad_checked(_b_prime_integrand, 0.0, s[i0], tol, args=(p,))
    vals[i0] = acc
    for i in range(i0 + 1, len(s)):
        acc += _quad_checked(_b_prime_integrand, s[i - 1], s[i], tol, args=(p,))
        vals[i] = acc
    acc = vals[i0]
    for i in range(i0 - 1, -1, -1):
        acc -= _quad_checked(_b_prime_integrand, s[i], s[i + 1], tol, args=(p,))
        vals[i] = acc
    return CubicSpline(s, vals)


def b_prime_eval(model: DiffusionModel, u):
    """First primitive of a(u)/u anchored at 1 (b'(1) = 0).

    Closed forms for p in {0, 1}; adaptive quadrature otherwise.
    Arguments below U_FLOOR are clamped to it (roundoff guard).
    """
    arr = _checked(u, positive=True)
    arr = np.maximum(arr, U_FLOOR)
    p = model.p
    if p == 0.0:
        out = np.log(arr)
    elif p == 1.0:
        out = np.log(2.0 * arr / (1.0 + arr))
    else:
        flat = np.atleast_1d(arr).ravel()
        vals = np.array([_b_prime_quad(p, model.quadrature_tol, x) for x in flat])
        out = vals.reshape(np.shape(arr))
    return _maybe_scalar(out, u)


def b_eval(model: DiffusionModel, u):
    """Second primitive with b'' = a(u)/u and b(1) = b'(1) = 0.

    For general p this uses the exact integration-by-parts identity
    b(u) = u*b'(u) - B(u), so only one quadrature level is needed.
    """
    arr = _checked(u, positive=True)
    arr = np.maximum(arr, U_FLOOR)
    p = model.p
    if p == 0.0:
        out = arr * np.log(arr) - arr + 1.0
    elif p == 1.0:
        out = arr * np.log(arr) - (1.0 + arr) * (np.log1p(arr) - _LOG2)
    else:
        out = arr * b_prime_eval(model, arr) - B_eval(model, arr)
    return _maybe_scalar(out, u)


def b_prime_fast(model: DiffusionModel, u: np.ndarray) -> np.ndarray:
    """Vectorized b' for trajectory functionals.

    Uses the closed forms when available and the cached log-spaced table
    otherwise; table accuracy (~1e-9) is far below trajectory residual
    scales.  Points outside the table range are integrated directly.
    """
    arr = np.maximum(np.asarray(u, dtype=float), U_FLOOR)
    p = model.p
    if p == 0.0 or p == 1.0:
        return np.asarray(b_prime_eval(model, arr))
    spline = _b_prime_table(p, model.quadrature_tol)
    s = np.log(arr)
    out = spline(np.clip(s, _TABLE_LOG_MIN, _TABLE_LOG_MAX))
    outside = (s < _TABLE_LOG_MIN) | (s > _TABLE_LOG_MAX)
    if np.any(outside):
        for idx in np.nonzero(outside)[0]:
            out[idx] = _b_prime_quad(p, model.quadrature_tol, arr[idx])
    return out


def b_fast(model: DiffusionModel, u: np.ndarray) -> np.ndarray:
    """Vectorized b via b(u) = u*b'(u) - B(u); exact given b'."""
    arr = np.maximum(np.asarray(u, dtype=float), U_FLOOR)
    p = model.p
    if p == 0.0 or p == 1.0:
        return np.asarray(b_eval(model, arr))
    return arr * b_prime_fast(model, arr) - B_eval(model, arr)
