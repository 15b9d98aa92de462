import numpy as np
import pytest

from ks1d import DomainError, InitialCondition, make_grid, make_initial_state
from ks1d.operators import face_gradient


class TestGrid:
    def test_small_grid(self):
        g = make_grid(4)
        assert g.dx == 0.25
        assert np.allclose(g.centers, [0.125, 0.375, 0.625, 0.875], atol=0, rtol=0)
        assert np.allclose(g.faces, [0.0, 0.25, 0.5, 0.75, 1.0], atol=0, rtol=0)

    def test_dx(self):
        assert make_grid(100).dx == 0.01

    def test_too_small(self):
        with pytest.raises(DomainError):
            make_grid(3)
        with pytest.raises(DomainError):
            make_grid(0)


class TestInitialCondition:
    def test_invalid_parameters(self):
        with pytest.raises(DomainError):
            InitialCondition(family="square", mass=1.0)
        with pytest.raises(DomainError):
            InitialCondition(family="constant", mass=0.0)
        with pytest.raises(DomainError):
            InitialCondition(family="cosine", mass=1.0, amplitude=1.0)
        with pytest.raises(DomainError):
            InitialCondition(family="bump", mass=1.0, width=0.0)
        with pytest.raises(DomainError):
            InitialCondition(family="bump", mass=1.0, center=1.5)
        with pytest.raises(DomainError):
            InitialCondition(family="constant", mass=1.0, v0_mode="zero")

    def test_constant(self):
        g = make_grid(8)
        s = make_initial_state(g, InitialCondition(family="constant", mass=2.0))
        assert np.all(s.u == 2.0)
        assert s.t == 0.0
        assert np.sum(s.u) * g.dx == pytest.approx(2.0, rel=1e-15)

    def test_cosine_mass_normalization(self):
        g = make_grid(64)
        ic = InitialCondition(family="cosine", mass=1.0, amplitude=0.5)
        s = make_initial_state(g, ic)
        assert np.sum(s.u) * g.dx == pytest.approx(1.0, rel=1e-14)
        assert np.all(s.u >= 0.0)

    def test_bump_sup_matches_direct_evaluation(self):
        g = make_grid(64)
        ic = InitialCondition(family="bump", mass=10.0, width=0.1, center=0.5)
        s = make_initial_state(g, ic)
        profile = np.exp(-(((g.centers - 0.5) / 0.1) ** 2))
        expected_sup = 10.0 * profile.max() / (np.sum(profile) * g.dx)
        assert s.u.max() == pytest.approx(expected_sup, rel=1e-14)
        assert np.sum(s.u) * g.dx == pytest.approx(10.0, rel=1e-14)

    @pytest.mark.parametrize("n", [8, 64, 513, 4096])
    @pytest.mark.parametrize("family,kwargs", [
        ("constant", {}),
        ("cosine", {"amplitude": 0.999}),
        ("bump", {"width": 0.05, "center": 0.3}),
    ])
    def test_all_families_mass_and_positivity(self, n, family, kwargs):
        g = make_grid(n)
        ic = InitialCondition(family=family, mass=3.5, **kwargs)
        s = make_initial_state(g, ic)
        assert np.all(s.u >= 0.0)
        assert np.sum(s.u) * g.dx == pytest.approx(3.5, rel=1e-14)

    def test_v0_modes(self):
        g = make_grid(16)
        s = make_initial_state(
            g, InitialCondition(family="cosine", mass=2.0, amplitude=0.25))
        assert np.array_equal(s.v, s.u)
        s.u[0] = -99.0
        assert s.v[0] != -99.0  # independent copy
        s2 = make_initial_state(
            g, InitialCondition(family="cosine", mass=2.0, amplitude=0.25,
                                v0_mode="constant_mass"))
        assert np.all(s2.v == 2.0)

    def test_cosine_boundary_face_gradient(self):
        g = make_grid(64)
        s = make_initial_state(
            g, InitialCondition(family="cosine", mass=1.0, amplitude=0.5))
        grad = face_gradient(s.u, g)
        assert grad[0] == 0.0
        assert grad[-1] == 0.0
