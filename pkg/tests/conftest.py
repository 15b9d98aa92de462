import numpy as np
import pytest

from ks1d import DiffusionModel, StepControl, run_trajectory
from ks1d.grid import State, make_grid


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Force JIT compilation up front so timed tests measure the algorithm."""
    grid = make_grid(8)
    s0 = State(0.0, np.ones(8), np.ones(8))
    run_trajectory(s0, DiffusionModel(p=1.0), grid, StepControl(), 1e-4, 1e-4)
    run_trajectory(s0, DiffusionModel(p=1.0), grid, StepControl(), 1e-4, 1e-4,
                   growth_source=True)
    run_trajectory(s0, DiffusionModel(p=0.5), grid, StepControl(), 1e-4, 1e-4)
