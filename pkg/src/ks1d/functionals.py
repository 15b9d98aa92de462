"""Monitored functionals, dissipation rates, and identity residuals.

Cell integrals use the midpoint rule; gradient-weighted integrals sum
over interior faces with the face-averaged density, the same stencil the
fluxes use, so the discrete identities inherit the telescoping structure
of their continuum counterparts.

Naming of the monitored quantities follows the run CSV schema:
``L`` is the classical Lyapunov functional, ``F`` the gradient-weighted
growth functional (general and critical forms), ``D`` its dissipation,
``R`` the growth rate bounding dF/dt + D, and ``G`` the gradient weight
integral that both F and the entropy bounds are built from.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import UsageError
from .grid import Grid, State
from .models import U_FLOOR, DiffusionModel, a_eval, b_fast, b_prime_fast
from .operators import face_gradient, system_rhs, vt_field

_LOG2 = math.log(2.0)

#: Run-level vacuum warning threshold (distinct from the U_FLOOR clamp):
#: gradient weights carry 1/u, so runs whose density drops below this are
#: flagged as potentially vacuum-dominated.
VACUUM_WARN = 1e-10


@dataclass(frozen=True)
class FunctionalSnapshot:
    """One sampled row of all monitored functionals at a time instant."""

    t: float
    dt_current: float
    mass: float
    sup_u: float
    min_u: float
    entropy: float
    grad_weight: float
    L_classical: float
    L_dissipation: float
    F_general: float
    F_critical: float
    D_dissipation: float
    R_rate: float
    prop41_gap: float
    regest3_gap: float
    cube_norm: float
    v_L2: float
    vt_L2: float
    cumulative_vt2: float
    vacuum_flag: bool


class AuxiliaryMonitors(NamedTuple):
    cube_norm: float
    entropy: float
    v_L2: float
    vt_L2: float
    bhn: tuple[float, float, float, float]


def mass(u, grid: Grid) -> float:
    """Discrete total mass, midpoint rule."""
    return float(np.sum(u) * grid.dx)


def _clamped(u: np.ndarray) -> np.ndarray:
    return np.maximum(u, U_FLOOR)


def _interior_grad(u: np.ndarray, dx: float) -> np.ndarray:
    return np.diff(u) / dx


def _face_avg_clamped(u: np.ndarray) -> np.ndarray:
    return _clamped(0.5 * (u[:-1] + u[1:]))


def grad_weight(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Gradient-weight integral of (a(u))^2/u |du/dx|^2 over the domain.

    For the critical exponent this is the integral of |du/dx|^2 / (u(1+u)^2).
    """
    gu = _interior_grad(state.u, grid.dx)
    ub = _face_avg_clamped(state.u)
    w = a_eval(model, ub) ** 2 / ub
    return float(np.sum(w * gu * gu) * grid.dx)


def entropy(u, grid: Grid) -> float:
    """Integral of u*log(1+u)."""
    arr = np.asarray(u, dtype=float)
    return float(np.sum(arr * np.log1p(arr)) * grid.dx)


def classical_L(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Classical Lyapunov functional: int b(u) - int u v + H1-norm of v over 2."""
    u = _clamped(state.u)
    bvals = b_fast(model, u)
    gv = face_gradient(state.v, grid)
    h1 = np.sum(state.v**2) * grid.dx + np.sum(gv**2) * grid.dx
    return float(np.sum(bvals) * grid.dx - np.sum(state.u * state.v) * grid.dx + 0.5 * h1)


def classical_dissipation(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Dissipation rate of classical_L: int vt^2 + int u |(b'(u) - v)_x|^2."""
    vt = vt_field(state, model, grid)
    w = b_prime_fast(model, _clamped(state.u)) - state.v
    gw = _interior_grad(w, grid.dx)
    ub = 0.5 * (state.u[:-1] + state.u[1:])
    return float(np.sum(vt**2) * grid.dx + np.sum(ub * gw * gw) * grid.dx)


def F_general(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Growth functional: half the gradient-weight integral minus int u*B(u)."""
    gu = _interior_grad(state.u, grid.dx)
    ub = _face_avg_clamped(state.u)
    w = a_eval(model, ub) ** 2 / ub
    grad_term = 0.5 * np.sum(w * gu * gu) * grid.dx
    u = _clamped(state.u)
    if model.p == 1.0:
        big_b = np.log1p(u) - _LOG2
    else:
        q = 1.0 - model.p
        big_b = ((1.0 + u) ** q - 2.0**q) / q
    return float(grad_term - np.sum(state.u * big_b) * grid.dx)


def F_critical(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Critical-exponent form of the growth functional.

    Differs from F_general only by the additive constant mass*log(2);
    only defined for p = 1.
    """
    if model.p != 1.0:
        raise UsageError("F_critical is defined for the critical exponent p = 1 only")
    gu = _interior_grad(state.u, grid.dx)
    ub = _face_avg_clamped(state.u)
    grad_term = 0.5 * np.sum(gu * gu / (ub * (1.0 + ub) ** 2)) * grid.dx
    return float(grad_term - entropy(state.u, grid))


def D_dissipation(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Nonnegative dissipation quadratic form of the growth functional.

    Integrand: u a(u) |div((a(u)/u) grad u) - lap v + (v + vt)/2|^2, with
    every divergence using the same face-to-cell stencil as the fluxes.
    """
    n = grid.n_cells
    gu = _interior_grad(state.u, grid.dx)
    ub = _face_avg_clamped(state.u)
    h = np.zeros(n + 1)
    h[1:-1] = a_eval(model, ub) / ub * gu
    div_h = np.diff(h) / grid.dx
    lap_v = np.diff(face_gradient(state.v, grid)) / grid.dx
    vt = vt_field(state, model, grid)
    q = div_h - lap_v + 0.5 * (state.v + vt)
    return float(np.sum(state.u * a_eval(model, state.u) * q * q) * grid.dx)


def R_rate(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Growth rate integral u a(u) (v + vt)^2 / 4 controlling dF/dt + D."""
    vt = vt_field(state, model, grid)
    s = state.v + vt
    return float(np.sum(state.u * a_eval(model, state.u) * s * s) * grid.dx / 4.0)


def prop41_gap(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Slack in the coercivity lower bound of the critical growth functional.

    F_critical - G/4 + M^3 + M log(1+M); nonnegative (up to discretization)
    along resolved trajectories, exactly M^3 at constant states.
    """
    if model.p != 1.0:
        raise UsageError("prop41_gap is defined for the critical exponent p = 1 only")
    m = mass(state.u, grid)
    g = grad_weight(state, model, grid)
    return F_critical(state, model, grid) - 0.25 * g + m**3 + m * math.log1p(m)


def regest3_gap(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Slack in the entropy bound: M^(3/2) sqrt(G) + M log(1+M) - entropy."""
    if model.p != 1.0:
        raise UsageError("regest3_gap is defined for the critical exponent p = 1 only")
    m = mass(state.u, grid)
    g = grad_weight(state, model, grid)
    return m**1.5 * math.sqrt(g) + m * math.log1p(m) - entropy(state.u, grid)


def quarter_coefficient_gap(state: State, model: DiffusionModel, grid: Grid) -> float:
    """Recorded (never asserted) variant of the entropy bound with
    coefficient 1/4 on sqrt(G) instead of M^(3/2)."""
    if model.p != 1.0:
        raise UsageError("quarter_coefficient_gap requires p = 1")
    m = mass(state.u, grid)
    g = grad_weight(state, model, grid)
    return m**3 + m * math.log1p(m) + 0.25 * math.sqrt(g) - entropy(state.u, grid)


def auxiliary_monitors(state: State, model: DiffusionModel, grid: Grid) -> AuxiliaryMonitors:
    """Side monitors: int (1+u)^3, entropy, L2 norms of v and vt, and the
    quadruple (|u|_L4^4, |u|_H1^2, int |u log u|, |u|_L1)."""
    u = np.asarray(state.u, dtype=float)
    dx = grid.dx
    cube = float(np.sum((1.0 + u) ** 3) * dx)
    ent = entropy(u, grid)
    v_l2 = float(math.sqrt(np.sum(state.v**2) * dx))
    vt = vt_field(state, model, grid)
    vt_l2 = float(math.sqrt(np.sum(vt**2) * dx))
    l4 = float(np.sum(u**4) * dx)
    gu = face_gradient(u, grid)
    h1 = float(np.sum(u**2) * dx + np.sum(gu**2) * dx)
    ulogu = np.zeros_like(u)
    pos = u > 0.0
    ulogu[pos] = u[pos] * np.log(u[pos])
    ulogu_int = float(np.sum(np.abs(ulogu)) * dx)
    l1 = float(np.sum(np.abs(u)) * dx)
    return AuxiliaryMonitors(cube, ent, v_l2, vt_l2, (l4, h1, ulogu_int, l1))


def evaluate_snapshot(state: State, model: DiffusionModel, grid: Grid,
                      dt_current: float, cumulative_vt2: float) -> FunctionalSnapshot:
    """Assemble the full monitored row for one state.

    cumulative_vt2 is the running time integral of int vt^2 up to and
    including this instant (the caller accumulates it by trapezoid over
    the snapshot series).  For p != 1 the critical-only entries are NaN.
    """
    u = state.u
    aux = auxiliary_monitors(state, model, grid)
    critical = model.p == 1.0
    snap = FunctionalSnapshot(
        t=float(state.t),
        dt_current=float(dt_current),
        mass=mass(u, grid),
        sup_u=float(np.max(u)),
        min_u=float(np.min(u)),
        entropy=aux.entropy,
        grad_weight=grad_weight(state, model, grid),
        L_classical=classical_L(state, model, grid),
        L_dissipation=classical_dissipation(state, model, grid),
        F_general=F_general(state, model, grid),
        F_critical=F_critical(state, model, grid) if critical else math.nan,
        D_dissipation=D_dissipation(state, model, grid),
        R_rate=R_rate(state, model, grid),
        prop41_gap=prop41_gap(state, model, grid) if critical else math.nan,
        regest3_gap=regest3_gap(state, model, grid) if critical else math.nan,
        cube_norm=aux.cube_norm,
        v_L2=aux.v_L2,
        vt_L2=aux.vt_L2,
        cumulative_vt2=float(cumulative_vt2),
        vacuum_flag=bool(np.min(u) < U_FLOOR),
    )
    return snap


# ---------------------------------------------------------------------------
# snapshot-series diagnostics

def identity_residual_series(snapshots: Sequence[FunctionalSnapshot]):
    """Per-row residuals of the two differential identities.

    Row k >= 1 differences the interval [t_{k-1}, t_k] and pairs it with
    the trapezoidal average of the rates; row 0 is zero by convention.
    Returns (growth-identity residuals, Lyapunov-identity residuals).
    """
    n = len(snapshots)
    f_res = np.zeros(n)
    l_res = np.zeros(n)
    for k in range(1, n):
        a, b = snapshots[k - 1], snapshots[k]
        dt = b.t - a.t
        f_res[k] = (b.F_general - a.F_general) / dt \
            + 0.5 * (a.D_dissipation + b.D_dissipation) \
            - 0.5 * (a.R_rate + b.R_rate)
        l_res[k] = (b.L_classical - a.L_classical) / dt \
            + 0.5 * (a.L_dissipation + b.L_dissipation)
    return f_res, l_res


def cumulative_trapezoid(ts: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Running trapezoidal time integral, zero at the first sample."""
    out = np.zeros(len(ts))
    if len(ts) > 1:
        incr = 0.5 * (values[1:] + values[:-1]) * np.diff(ts)
        out[1:] = np.cumsum(incr)
    return out


def energy_bookkeeping_residual(snapshots: Sequence[FunctionalSnapshot]) -> float:
    """|L(0) - L(end) - integral of the dissipation| over the whole series."""
    ts = np.array([s.t for s in snapshots])
    diss = np.array([s.L_dissipation for s in snapshots])
    total = cumulative_trapezoid(ts, diss)[-1]
    return abs(snapshots[0].L_classical - snapshots[-1].L_classical - total)


def envelope_constant(ts: np.ndarray, values: np.ndarray) -> float:
    """Smallest C with values(t) <= C*(1+t) at every sample."""
    return float(np.max(np.asarray(values) / (1.0 + np.asarray(ts))))
