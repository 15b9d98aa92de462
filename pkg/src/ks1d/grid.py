"""Uniform cell-centered mesh on [0, 1], solution states, initial data."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

IC_FAMILIES = ("constant", "cosine", "bump")
V0_MODES = ("equal_to_u0", "constant_mass")

#: Relative tolerance of the discrete-mass normalization contract.
MASS_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform finite-volume mesh: n_cells cells of width dx = 1/n_cells.

    Cell centers sit at (i + 1/2) dx, faces at j dx.  Fluxes live on
    faces; cell averages live at centers.
    """

    n_cells: int
    dx: float = field(init=False)
    centers: np.ndarray = field(init=False)
    faces: np.ndarray = field(init=False)

    def __post_init__(self):
        if not isinstance(self.n_cells, (int, np.integer)) or self.n_cells < 4:
            raise DomainError(f"n_cells must be an integer >= 4, got {self.n_cells!r}")
        n = int(self.n_cells)
        dx = 1.0 / n
        object.__setattr__(self, "n_cells", n)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "centers", (np.arange(n) + 0.5) * dx)
        object.__setattr__(self, "faces", np.arange(n + 1) * dx)


def make_grid(n_cells: int) -> Grid:
    """Build the uniform mesh; raises DomainError for n_cells < 4."""
    return Grid(n_cells)


@dataclass
class State:
    """Solution snapshot: time stamp plus cell averages of u and v."""

    t: float
    u: np.ndarray
    v: np.ndarray

    def copy(self) -> "State":
        return State(self.t, self.u.copy(), self.v.copy())


@dataclass(frozen=True)
class InitialCondition:
    """Initial-datum family with a target discrete mass.

    family: "constant", "cosine" (1 + amplitude*cos(pi x), Neumann
    compatible), or "bump" (Gaussian profile of given width/center).
    v0_mode: "equal_to_u0" copies u0 into v0; "constant_mass" sets v0
    identically equal to the mass.
    """

    family: str
    mass: float
    amplitude: float = 0.0
    width: float = 0.1
    center: float = 0.5
    v0_mode: str = "equal_to_u0"

    def __post_init__(self):
        if self.family not in IC_FAMILIES:
            raise DomainError(f"family must be one of {IC_FAMILIES}, got {self.family!r}")
        if not (np.isfinite(self.mass) and self.mass > 0.0):
            raise DomainError(f"mass must be positive, got {self.mass}")
        if not (0.0 <= self.amplitude < 1.0):
            raise DomainError(f"amplitude must lie in [0, 1), got {self.amplitude}")
        if self.family == "bump":
            if not (np.isfinite(self.width) and self.width > 0.0):
                raise DomainError(f"width must be positive, got {self.width}")
            if not (0.0 < self.center < 1.0):
                raise DomainError(f"center must lie in (0, 1), got {self.center}")
        if self.v0_mode not in V0_MODES:
            raise DomainError(f"v0_mode must be one of {V0_MODES}, got {self.v0_mode!r}")


def make_initial_state(grid: Grid, ic: InitialCondition) -> State:
    """Sample the initial family on the grid, normalized to the target mass.

    The profile is evaluated at cell centers and rescaled so the discrete
    mass equals ic.mass to within MASS_RTOL relative.
    """
    x = grid.centers
    if ic.family == "constant":
        u0 = np.full(grid.n_cells, float(ic.mass))
    elif ic.family == "cosine":
        profile = 1.0 + ic.amplitude * np.cos(np.pi * x)
        u0 = ic.mass * profile
        u0 *= ic.mass / (np.sum(u0) * grid.dx)
    else:  # bump
        profile = np.exp(-(((x - ic.center) / ic.width) ** 2))
        u0 = ic.mass * profile / (np.sum(profile) * grid.dx)
    if np.any(u0 < 0.0):
        raise DomainError(
            f"initial family {ic.family!r} with the given parameters yields negative u0"
        )
    if ic.v0_mode == "equal_to_u0":
        v0 = u0.copy()
    else:
        v0 = np.full(grid.n_cells, float(ic.mass))
    return State(t=0.0, u=u0, v=v0)
