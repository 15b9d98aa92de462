import math

import numpy as np
import pytest
import sympy as sp

from ks1d import (
    DiffusionModel,
    DomainError,
    InitialCondition,
    StepControl,
    UsageError,
    key_identity_residual,
    key_identity_study,
    m_operator,
    refinement_study,
    standard_test_functions,
)
from ks1d.verifier import (
    ENERGY_BOOKKEEPING,
    GROWTH_IDENTITY,
    LYAPUNOV_IDENTITY,
    TestFunction as Profile,
)

TFS = {t.name: t for t in standard_test_functions()}


def sympy_m_operator(phi_expr, p):
    """Symbolic form of the pointwise operator, for oracle evaluation."""
    x = sp.symbols("x")
    a = (1 + phi_expr) ** (-p)
    ap = sp.diff((1 + sp.symbols("w")) ** (-p), sp.symbols("w")).subs(sp.symbols("w"), phi_expr)
    d1 = sp.diff(phi_expr, x)
    d2 = sp.diff(phi_expr, x, 2)
    return a * ap / phi_expr * d1**2 - a**2 / (2 * phi_expr**2) * d1**2 + a**2 / phi_expr * d2


class TestMOperator:
    def test_constant_profile(self):
        m = DiffusionModel(p=1.0)
        x = np.linspace(0, 1, 33)
        tf = TFS["constant_2"]
        vals = m_operator(tf.f(x), tf.d1(x), tf.d2(x), m)
        assert np.all(vals == 0.0)

    def test_cosine_midpoint_value(self):
        # phi(1/2) = 2, phi' = -pi, phi'' = 0 with a = 1/3, a' = -1/9:
        # the two gradient terms give -(1/54 + 1/72) pi^2 = -7 pi^2 / 216
        m = DiffusionModel(p=1.0)
        tf = TFS["cos_pi"]
        x = np.array([0.5])
        val = m_operator(tf.f(x), tf.d1(x), tf.d2(x), m)[0]
        assert val == pytest.approx(-7.0 * math.pi**2 / 216.0, rel=1e-14)

    @pytest.mark.parametrize("p", [1.0, 0.5])
    def test_parabola_against_symbolic_oracle(self, p):
        xs = sp.symbols("x")
        phi_expr = 2 + xs * (1 - xs)
        oracle = sp.lambdify(xs, sympy_m_operator(phi_expr, sp.Rational(p).limit_denominator()), "numpy")
        m = DiffusionModel(p=p)
        tf = TFS["parabola"]
        pts = np.array([0.1, 0.25, 0.5, 0.8, 0.95])
        got = m_operator(tf.f(pts), tf.d1(pts), tf.d2(pts), m)
        assert np.allclose(got, oracle(pts), rtol=1e-12)

    def test_positivity_required(self):
        m = DiffusionModel(p=1.0)
        with pytest.raises(DomainError):
            m_operator(np.array([1.0, -0.5]), np.zeros(2), np.zeros(2), m)


class TestContinuumIdentity:
    @pytest.mark.parametrize("p", [1, sp.Rational(1, 2), 2])
    def test_symbolic_identity_high_precision(self, p):
        # the identity phi (M(phi))' = (phi a(phi) ((a/phi) phi')')' evaluated
        # at high precision on a transcendental profile; this is the
        # continuum fact the discrete residual study converges to
        x = sp.symbols("x")
        phi = 2 + sp.cos(sp.pi * x)
        lhs = phi * sp.diff(sympy_m_operator(phi, p), x)
        a = (1 + phi) ** (-p)
        rhs = sp.diff(phi * a * sp.diff(a / phi * sp.diff(phi, x), x), x)
        diff = sp.lambdify(x, lhs - rhs, "mpmath")
        import mpmath
        with mpmath.workdps(50):
            for xv in (0.137, 0.25, 0.5, 0.733, 0.91):
                assert abs(diff(mpmath.mpf(xv))) < mpmath.mpf("1e-30")


class TestKeyIdentityResidual:
    def test_constant_exact(self):
        m = DiffusionModel(p=1.0)
        for n in (64, 128, 256):
            assert key_identity_residual(TFS["constant_2"], m, n + 1) <= 1e-13

    def test_resolution_guard(self):
        with pytest.raises(UsageError):
            key_identity_residual(TFS["cos_pi"], DiffusionModel(p=1.0), 8)

    def test_nonpositive_profile_rejected(self):
        bad = Profile(
            "dips_negative",
            lambda x: np.cos(2 * np.pi * np.asarray(x, dtype=float)),
            lambda x: -2 * np.pi * np.sin(2 * np.pi * x),
            lambda x: -4 * np.pi**2 * np.cos(2 * np.pi * x),
            lambda x: 8 * np.pi**3 * np.sin(2 * np.pi * x),
            positivity_margin=-1.0,
            boundary_compatible=True,
        )
        with pytest.raises(DomainError):
            key_identity_residual(bad, DiffusionModel(p=1.0), 65)

    def test_cosine_order(self):
        rep = key_identity_study(TFS["cos_pi"], DiffusionModel(p=1.0), [64, 128, 256])
        assert rep.passed
        assert min(rep.orders) >= 1.9

    def test_study_needs_three_levels(self):
        with pytest.raises(UsageError):
            key_identity_study(TFS["cos_pi"], DiffusionModel(p=1.0), [64, 128])


class TestRefinementStudy:
    def test_steady_scenario_is_exact(self):
        m = DiffusionModel(p=1.0)
        ic = InitialCondition(family="constant", mass=1.0)
        for sel in (GROWTH_IDENTITY, LYAPUNOV_IDENTITY, ENERGY_BOOKKEEPING):
            rep = refinement_study(m, ic, StepControl(), 0.05, 0.01, [16, 32, 64], sel)
            assert rep.exact
            assert rep.passed

    def test_guards(self):
        m = DiffusionModel(p=1.0)
        ic = InitialCondition(family="constant", mass=1.0)
        with pytest.raises(UsageError):
            refinement_study(m, ic, StepControl(), 0.1, 0.01, [16, 32], GROWTH_IDENTITY)
        with pytest.raises(UsageError):
            refinement_study(m, ic, StepControl(), 0.1, 0.01, [16, 32, 64], "bogus")

    def test_breakdown_aborts_with_status(self):
        # the concd bump collapses below grid scale almost immediately
        m = DiffusionModel(p=1.0)
        ic = InitialCondition(family="bump", mass=25.0, width=0.1, center=0.5)
        with pytest.raises(RuntimeError, match="blowup_detected"):
            refinement_study(m, ic, StepControl(), 2.0, 0.1, [16, 32, 64], GROWTH_IDENTITY)

    def test_shared_runs_reused(self):
        m = DiffusionModel(p=1.0)
        ic = InitialCondition(family="cosine", mass=2.0, amplitude=0.3)
        runs = {}
        rep1 = refinement_study(m, ic, StepControl(), 0.02, 0.005, [16, 32, 64],
                                GROWTH_IDENTITY, runs=runs)
        assert set(runs) == {16, 32, 64}
        outs = {n: id(o) for n, o in runs.items()}
        rep2 = refinement_study(m, ic, StepControl(), 0.02, 0.005, [16, 32, 64],
                                LYAPUNOV_IDENTITY, runs=runs)
        assert {n: id(o) for n, o in runs.items()} == outs
        assert rep1.name != rep2.name
