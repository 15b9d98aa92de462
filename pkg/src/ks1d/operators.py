"""Discrete spatial operators in zero-flux divergence form.

Face fields are plain arrays of length n_cells + 1; flux-like fields
vanish identically at the two boundary faces, which encodes the
zero-flux boundary condition and makes discrete mass conservation a
telescoping identity.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError
from .grid import Grid, State
from .models import DiffusionModel, a_eval


def _check_cells(w: np.ndarray, grid: Grid, name: str = "field") -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.shape != (grid.n_cells,):
        raise DomainError(
            f"{name} has length {arr.shape}, expected ({grid.n_cells},)"
        )
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def face_gradient(w, grid: Grid) -> np.ndarray:
    """Two-point gradient at interior faces, zero at boundary faces."""
    arr = _check_cells(w, grid)
    g = np.zeros(grid.n_cells + 1)
    g[1:-1] = np.diff(arr) / grid.dx
    return g


def face_average(w, grid: Grid) -> np.ndarray:
    """Arithmetic average of cell values at interior faces (length n_cells - 1)."""
    arr = _check_cells(w, grid)
    return 0.5 * (arr[:-1] + arr[1:])


def total_flux(state: State, model: DiffusionModel, grid: Grid) -> np.ndarray:
    """Combined diffusive/chemotactic flux a(u) du/dx - u dv/dx at faces.

    The face value of u is the arithmetic average, so the flux vanishes
    exactly at constant states.  Boundary faces carry zero flux.
    """
    u = _check_cells(state.u, grid, "u")
    v = _check_cells(state.v, grid, "v")
    ub = 0.5 * (u[:-1] + u[1:])
    gu = np.diff(u) / grid.dx
    gv = np.diff(v) / grid.dx
    flux = np.zeros(grid.n_cells + 1)
    flux[1:-1] = a_eval(model, ub) * gu - ub * gv
    return flux


def system_rhs(state: State, model: DiffusionModel, grid: Grid):
    """Semidiscrete right-hand sides (du/dt, dv/dt) of the coupled system.

    du/dt is the divergence of total_flux; dv/dt is the Neumann Laplacian
    of v minus v plus u.
    """
    flux = total_flux(state, model, grid)
    du_dt = np.diff(flux) / grid.dx
    gv = face_gradient(state.v, grid)
    dv_dt = np.diff(gv) / grid.dx - state.v + state.u
    return du_dt, dv_dt


def vt_field(state: State, model: DiffusionModel, grid: Grid) -> np.ndarray:
    """Time derivative of v evaluated through the v-equation.

    Functionals that involve dv/dt use this instead of differencing in
    time, so their values are properties of the state alone.
    """
    return system_rhs(state, model, grid)[1]
