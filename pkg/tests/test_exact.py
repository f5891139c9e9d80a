import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaplab.exact import (BarenblattParams, PlateauBump, SeparableSolution,
                           barenblatt_eval, barenblatt_front_radius,
                           barenblatt_mass, dirac_trace_test, integrate_midpoint,
                           pde_residual, separable_eval, separable_field)
from plaplab.grids import ScalarField, build_grid

BB = BarenblattParams(n=1, p=3.0, C=1.0)

# hand evaluation for n=1, p=3, C=1: lambda = 4, coefficient (1/3)*4^{-1/2} = 1/6,
# exponent (p-1)/(p-2) = 2, so B(1,1) = (1 - 1/6)^2 and the front solves
# |x|^{3/2}/6 = 1.  The mass integral reduces to 2 * 0.45 * 6^{2/3}.
HAND_VALUE_AT_1 = (5.0 / 6.0) ** 2
HAND_FRONT = 6.0 ** (2.0 / 3.0)
HAND_MASS = 0.9 * 6.0 ** (2.0 / 3.0)


def test_lambda_derived():
    assert BB.lam == 4.0
    assert BarenblattParams(2, 3.5, 1.0).lam == 2 * 1.5 + 3.5


def test_value_at_origin_is_C_power():
    assert barenblatt_eval(BB, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_hand_value_at_x1():
    assert barenblatt_eval(BB, 1.0, 1.0) == pytest.approx(HAND_VALUE_AT_1, rel=1e-14)


def test_front_radius_against_bisection():
    # independent oracle: bisect barenblatt_eval for the support edge
    lo_r, hi_r = 1.0, 10.0
    for _ in range(80):
        mid = 0.5 * (lo_r + hi_r)
        if barenblatt_eval(BB, mid, 1.0) > 0:
            lo_r = mid
        else:
            hi_r = mid
    assert barenblatt_front_radius(BB, 1.0) == pytest.approx(lo_r, abs=1e-12)
    assert barenblatt_front_radius(BB, 1.0) == pytest.approx(HAND_FRONT, rel=1e-14)


def test_zero_outside_support_and_positive_inside():
    for t in (0.3, 1.0, 7.0):
        R = barenblatt_front_radius(BB, t)
        assert barenblatt_eval(BB, 1.001 * R, t) == 0.0
        assert barenblatt_eval(BB, 0.999 * R, t) > 0.0


def test_front_radius_increases_in_time():
    ts = [0.1, 0.5, 1.0, 2.0, 10.0]
    radii = [barenblatt_front_radius(BB, t) for t in ts]
    assert all(a < b for a, b in zip(radii, radii[1:]))


def test_t_nonpositive_rejected():
    with pytest.raises(ValueError):
        barenblatt_eval(BB, 0.0, 0.0)
    with pytest.raises(ValueError):
        barenblatt_front_radius(BB, -1.0)
    with pytest.raises(ValueError):
        barenblatt_mass(BB, 0.0)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.1, 10.0), x=st.floats(-4.0, 4.0), t=st.floats(0.2, 5.0))
def test_self_similar_scaling(s, x, t):
    left = barenblatt_eval(BB, x, t)
    right = s ** (BB.n / BB.lam) * barenblatt_eval(BB, s ** (1.0 / BB.lam) * x, s * t)
    assert left == pytest.approx(right, rel=1e-12, abs=1e-13)


def test_mass_matches_hand_integral():
    assert barenblatt_mass(BB, 1.0) == pytest.approx(HAND_MASS, rel=1e-7)


def test_mass_independent_of_time():
    m1 = barenblatt_mass(BB, 1.0)
    for t in (2.0, 0.1, 0.01):
        assert barenblatt_mass(BB, t) == pytest.approx(m1, rel=1e-6)


def test_mass_vanishes_with_C():
    small = barenblatt_mass(BarenblattParams(1, 3.0, 1e-4), 1.0)
    assert small < 1e-6


def test_mass_2d_time_independent():
    bb2 = BarenblattParams(2, 3.0, 0.5)
    assert barenblatt_mass(bb2, 1.0) == pytest.approx(barenblatt_mass(bb2, 3.0), rel=1e-6)


def test_integrate_midpoint_polynomial():
    assert integrate_midpoint(lambda x: x * x, 0.0, 1.0) == pytest.approx(1 / 3, rel=1e-8)


class TestPlateauBump:
    def test_plateau_and_support(self):
        phi = PlateauBump(0.5, 1.0)
        assert phi(0.0) == 1.0
        assert phi(0.49) == 1.0
        assert phi(1.01) == 0.0
        assert 0.0 < phi(0.75) < 1.0

    def test_no_plateau_peak(self):
        phi = PlateauBump(0.0, 1.0)
        assert phi(0.0) == 1.0
        assert phi(0.5) < 1.0

    def test_shifted_center(self):
        phi = PlateauBump(0.1, 0.3, center=2.0)
        assert phi(2.0) == 1.0
        assert phi(0.0) == 0.0

    def test_height(self):
        phi = PlateauBump(0.2, 0.5, height=0.5)
        assert phi(0.0) == 0.5


class TestDiracTrace:
    def test_plateau_gives_mass_exactly(self):
        phi = PlateauBump(0.6, 1.2)
        mass = barenblatt_mass(BB, 1.0)
        # support radius at 1e-3 is ~0.587 < 0.6: inside the plateau
        vals = dirac_trace_test(BB, phi, [1e-3, 1e-4])
        assert np.allclose(vals, mass, rtol=1e-7)

    def test_half_height_bump_limit(self):
        phi = PlateauBump(0.4, 1.2, height=0.5)
        mass = barenblatt_mass(BB, 1.0)
        vals = dirac_trace_test(BB, phi, [1e-2, 1e-3, 1e-4, 1e-5])
        errs = np.abs(vals - 0.5 * mass)
        assert errs[-1] < 1e-6
        assert all(errs[j + 1] < errs[j] or errs[j] < 1e-9 for j in range(len(errs) - 1))

    def test_support_away_from_origin_gives_zero(self):
        phi = PlateauBump(0.2, 0.5, center=3.0)
        vals = dirac_trace_test(BB, phi, [1e-3, 1e-4])
        assert np.allclose(vals, 0.0, atol=1e-12)


class TestSeparable:
    def _sep(self):
        g = build_grid(1, 0, 1, 11)
        vals = np.sin(np.pi * g.axes()[0])
        vals[0] = vals[-1] = 0.0
        return SeparableSolution(ScalarField(g, vals), p=3.0)

    def test_time_one_identity(self):
        sep = self._sep()
        assert separable_eval(sep, 5, 1.0) == sep.profile[5]

    def test_p3_quarter_at_t4(self):
        sep = self._sep()
        assert separable_eval(sep, 3, 4.0) == pytest.approx(sep.profile[3] / 4.0)

    def test_p4_inverse_sqrt(self):
        g = build_grid(1, 0, 1, 11)
        vals = np.sin(np.pi * g.axes()[0])
        vals[0] = vals[-1] = 0.0
        sep = SeparableSolution(ScalarField(g, vals), p=4.0)
        assert separable_eval(sep, 3, 9.0) == pytest.approx(sep.profile[3] / 3.0)

    def test_field_version_matches(self):
        sep = self._sep()
        f = separable_field(sep, 2.0)
        assert f[4] == pytest.approx(separable_eval(sep, 4, 2.0))

    def test_negative_profile_rejected(self):
        g = build_grid(1, 0, 1, 5)
        with pytest.raises(ValueError, match="nonnegative"):
            SeparableSolution(ScalarField(g, np.array([0, -1, 0, 1, 0.0])), p=3.0)

    def test_nonzero_boundary_rejected(self):
        g = build_grid(1, 0, 1, 5)
        with pytest.raises(ValueError, match="boundary"):
            SeparableSolution(ScalarField(g, np.ones(5)), p=3.0)

    def test_t_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            separable_eval(self._sep(), 2, 0.0)


class TestPdeResidual:
    def test_constant_is_exact_solution(self):
        assert pde_residual(lambda x, t: 4.2, 0.3, 1.0, p=3.0, fd_steps=1e-3) == 0.0

    def test_barenblatt_residual_second_order(self):
        u = lambda x, t: barenblatt_eval(BB, x, t)
        res = [abs(pde_residual(u, 1.0, 1.0, p=3.0, fd_steps=d))
               for d in (0.02, 0.01, 0.005)]
        assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)
        assert res[1] / res[2] == pytest.approx(4.0, rel=0.05)

    def test_barenblatt_residual_2d(self):
        bb2 = BarenblattParams(2, 3.0, 0.5)
        u = lambda x, t: barenblatt_eval(bb2, x, t)
        assert abs(pde_residual(u, [0.4, 0.2], 1.0, p=3.0, fd_steps=0.005)) < 1e-5

    def test_requires_positive_time(self):
        with pytest.raises(ValueError):
            pde_residual(lambda x, t: x, 0.0, 0.0, p=3.0)
