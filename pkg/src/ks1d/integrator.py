"""Adaptive explicit time stepping with positivity safeguards and
blowup detection.

Each step proposes the explicit stability bound, integrates with the
classical order-4 Runge-Kutta tableau, and accepts only if the
step-doubling error estimate passes; rejections halve the step.  A run
ends in one of three ways: the target time is reached, the sup-norm
crosses the blowup threshold (or the step collapses while the sup-norm
grows), or the step collapses without growth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError
from .functionals import FunctionalSnapshot, evaluate_snapshot
from .grid import Grid, State
from .models import DiffusionModel
from .operators import vt_field

COMPLETED = "completed"
BLOWUP_DETECTED = "blowup_detected"
STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class StepControl:
    """Step-size policy knobs for the adaptive integrator."""

    cfl_safety: float = 0.4
    rel_tol: float = 1e-7
    dt_min: float = 1e-12
    dt_max: float = math.inf
    u_max_threshold: float = 1e6

    def __post_init__(self):
        if not (0.0 < self.cfl_safety < 1.0):
            raise ConfigError(f"cfl_safety must lie in (0, 1), got {self.cfl_safety}")
        if not (self.rel_tol > 0.0):
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if not (0.0 < self.dt_min < self.dt_max):
            raise ConfigError(
                f"dt_min must satisfy 0 < dt_min < dt_max, got {self.dt_min}, {self.dt_max}"
            )
        if not (self.u_max_threshold > 0.0):
            raise ConfigError(f"u_max_threshold must be positive, got {self.u_max_threshold}")


@dataclass
class RunOutcome:
    """Result of one trajectory: status, final state, snapshot series."""

    status: str
    final_state: State
    snapshots: list[FunctionalSnapshot]
    blowup_time_estimate: Optional[float] = None
    states: Optional[list[State]] = None
    n_steps: int = 0
    n_rejected: int = 0


def stable_dt(state: State, model: DiffusionModel, grid: Grid,
              control: StepControl) -> float:
    """Explicit stability bound for the current state.

    cfl_safety times the minimum of dx^2/(2 max a), dx/max|dv/dx|, and
    dx^2/2, guarding u-diffusion, u-advection, and v-diffusion.
    """
    return float(kernels.stable_dt_kernel(
        np.asarray(state.u, dtype=float), np.asarray(state.v, dtype=float),
        grid.dx, model.p, kernels.ptype_of(model.p), control.cfl_safety,
    ))


def attempt_step(state: State, dt: float, model: DiffusionModel, grid: Grid,
                 rel_tol: float = 1e-7, growth_source: bool = False) -> Optional[State]:
    """One step-doubling attempt of size dt; None means rejection.

    Accepted states keep the two-half-step solution with roundoff
    negatives of u clamped to zero.
    """
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    u = np.asarray(state.u, dtype=float).copy()
    v = np.asarray(state.v, dtype=float).copy()
    n = grid.n_cells
    ptype = kernels.ptype_of(model.p)
    work = np.empty((20, n))
    k1u = np.empty(n)
    k1v = np.empty(n)
    au = np.empty(n)
    av = np.empty(n)
    cu = np.zeros(n)
    cv = np.zeros(n)
    acu = np.empty(n)
    acv = np.empty(n)
    kernels.rhs(u, v, k1u, k1v, grid.dx, model.p, ptype, growth_source)
    ok, _err = kernels.try_step(u, v, cu, cv, k1u, k1v, dt, rel_tol, grid.dx, model.p,
                                ptype, growth_source, work, au, av, acu, acv)
    if not ok:
        return None
    return State(state.t + dt, au, av)


def run_trajectory(initial: State, model: DiffusionModel, grid: Grid,
                   control: StepControl, t_end: float, sample_interval: float,
                   growth_source: bool = False,
                   keep_states: bool = False) -> RunOutcome:
    """Advance from the initial state to t_end, sampling functionals.

    Snapshots are taken at the initial time, every sample_interval of
    simulated time, and at t_end (or at the breakdown time).  With
    growth_source=True the u-equation drops diffusion and gains a u^2
    source (the blowup-detector surrogate; mass is then not conserved).
    """
    if not (t_end > initial.t):
        raise ConfigError(f"t_end must exceed the initial time, got {t_end} <= {initial.t}")
    if not (sample_interval > 0.0):
        raise ConfigError(f"sample_interval must be positive, got {sample_interval}")
    if initial.u.shape != (grid.n_cells,) or initial.v.shape != (grid.n_cells,):
        raise ConfigError("initial state does not match the grid")

    t0 = float(initial.t)
    targets = []
    k = 1
    while t0 + k * sample_interval < t_end - 1e-14 * max(1.0, t_end):
        targets.append(t0 + k * sample_interval)
        k += 1
    targets.append(float(t_end))

    u = np.asarray(initial.u, dtype=float).copy()
    v = np.asarray(initial.v, dtype=float).copy()
    ptype = kernels.ptype_of(model.p)

    snaps: list[FunctionalSnapshot] = []
    states: list[State] | None = [] if keep_states else None

    cum_vt2 = 0.0
    first = evaluate_snapshot(State(t0, u.copy(), v.copy()), model, grid, 0.0, cum_vt2)
    snaps.append(first)
    if states is not None:
        states.append(State(t0, u.copy(), v.copy()))

    t = t0
    last_dt = 0.0
    status = COMPLETED
    blowup_t: Optional[float] = None
    total_steps = 0
    total_rej = 0
    prev_vt2 = first.vt_L2**2

    for target in targets:
        code, t, last_dt, _sup, nsteps, nrej = kernels.advance(
            u, v, t, target, grid.dx, model.p, ptype, growth_source,
            control.cfl_safety, control.rel_tol, control.dt_min, control.dt_max,
            control.u_max_threshold, float(np.max(u)), last_dt,
        )
        total_steps += nsteps
        total_rej += nrej
        if t > snaps[-1].t:
            st = State(t, u.copy(), v.copy())
            vt = vt_field(st, model, grid)
            vt2 = float(np.sum(vt**2) * grid.dx)
            cum_vt2 += 0.5 * (prev_vt2 + vt2) * (t - snaps[-1].t)
            prev_vt2 = vt2
            snaps.append(evaluate_snapshot(st, model, grid, last_dt, cum_vt2))
            if states is not None:
                states.append(st)
        if code == kernels.SUP_THRESHOLD or code == kernels.COLLAPSE_GROWING:
            status = BLOWUP_DETECTED
            blowup_t = t
            break
        if code == kernels.COLLAPSE_STALLED:
            status = STEP_FAILURE
            break

    final = State(t, u, v)
    return RunOutcome(status=status, final_state=final, snapshots=snaps,
                      blowup_time_estimate=blowup_t, states=states,
                      n_steps=total_steps, n_rejected=total_rej)
