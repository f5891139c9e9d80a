import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from plaplab.elliptic import (EllipticConfig, TrivialSolutionError, giant_residual,
                              solve_barrier, solve_giant, solve_p_harmonic)
from plaplab.exact import pde_residual
from plaplab.grids import MediumParams, ScalarField, build_grid, partition_half_ball
from plaplab.parabolic import SolveConfig, rescaled_step

P3 = MediumParams(p=3.0, eps=0.0, n=1)


@pytest.fixture(scope="module")
def giant_101():
    g = build_grid(1, 0, 1, 101)
    return g, solve_giant(g, P3, EllipticConfig(eps=0.0))


class TestPHarmonic:
    @pytest.mark.parametrize("p", [2.5, 3.0, 4.0])
    def test_1d_identity_map(self, p):
        # 1D p-harmonic functions are affine for every p
        g = build_grid(1, 0, 1, 101)
        bv = np.zeros(g.shape)
        bv[-1] = 1.0
        w = solve_p_harmonic(g, bv, p, EllipticConfig())
        assert np.max(np.abs(w.values - g.axes()[0])) < 1e-8

    def test_constant_boundary_values(self):
        g = build_grid(1, 0, 1, 41)
        w = solve_p_harmonic(g, np.full(g.shape, 0.7), 3.0, EllipticConfig())
        assert np.max(np.abs(w.values - 0.7)) < 1e-12

    def test_p2_matches_direct_linear_solve(self):
        # independent assembly of the five-point scheme in this test
        g = build_grid(2, (0, 0), (1, 1), (17, 17))
        x, y = g.meshgrid()
        bv = x * x - y * y
        w = solve_p_harmonic(g, bv, 2.0, EllipticConfig())

        idx = np.arange(g.num_nodes).reshape(g.shape)
        interior = g.interior_mask()
        rows, cols, data, rhs = [], [], [], np.zeros(g.num_nodes)
        hx2, hy2 = g.h[0] ** 2, g.h[1] ** 2
        for i in range(g.cells[0]):
            for j in range(g.cells[1]):
                r = idx[i, j]
                if not interior[i, j]:
                    rows.append(r); cols.append(r); data.append(1.0)
                    rhs[r] = bv[i, j]
                    continue
                rows += [r, r, r, r, r]
                cols += [r, idx[i - 1, j], idx[i + 1, j], idx[i, j - 1], idx[i, j + 1]]
                data += [2 / hx2 + 2 / hy2, -1 / hx2, -1 / hx2, -1 / hy2, -1 / hy2]
        A = sp.csr_matrix((data, (rows, cols)), shape=(g.num_nodes,) * 2)
        direct = spsolve(A.tocsc(), rhs).reshape(g.shape)
        assert np.max(np.abs(w.values - direct)) < 1e-10

    def test_2d_half_disc_barrier(self):
        for cells in (41, 81):
            g = build_grid(2, (0, 0), (1, 1), (cells, cells))
            part = partition_half_ball(g, (0.5, 0.5), 0.3, (1.0, 0.0))
            w = solve_barrier(part, 3.0, EllipticConfig())
            vals = w.values[part.minus]
            assert vals.min() >= -1e-12 and vals.max() <= 1 + 1e-12
            adj = np.zeros(g.shape, dtype=bool)
            adj[:-1, :] = part.interface[1:, :]
            near = part.unknowns & adj
            assert (w.values[near] > 0).all()

    def test_maximum_principle_range(self):
        g = build_grid(1, 0, 1, 41)
        bv = np.zeros(g.shape)
        bv[0], bv[-1] = 0.2, 0.9
        w = solve_p_harmonic(g, bv, 3.5, EllipticConfig())
        assert w.values.min() >= 0.2 - 1e-10
        assert w.values.max() <= 0.9 + 1e-10

    def test_rounded_interface_profile(self):
        g = build_grid(2, (0, 0), (1, 1), (41, 41))
        part = partition_half_ball(g, (0.5, 0.5), 0.3, (1.0, 0.0))
        sharp = solve_barrier(part, 3.0, EllipticConfig())
        rounded = solve_barrier(part, 3.0, EllipticConfig(), plateau_frac=0.5)
        assert rounded.values[part.interface].max() == pytest.approx(1.0)
        assert rounded.values[part.interface].min() < 0.2
        # rounding lowers the data, so the solution cannot increase
        assert np.max(rounded.values - sharp.values) <= 1e-9

    def test_exponent_below_one_rejected(self):
        g = build_grid(1, 0, 1, 11)
        with pytest.raises(ValueError, match="p > 1"):
            solve_p_harmonic(g, np.zeros(g.shape), 1.0, EllipticConfig())


class TestGiant:
    def test_positive_interior_zero_boundary(self, giant_101):
        g, U = giant_101
        assert U.values[g.interior_mask()].min() > 0
        assert np.max(np.abs(U.values[g.boundary_mask()])) < 1e-14

    def test_residual_below_tolerance(self, giant_101):
        _, U = giant_101
        assert giant_residual(U, P3) < 1e-6

    def test_zero_field_has_zero_residual(self):
        g = build_grid(1, 0, 1, 21)
        assert giant_residual(ScalarField.constant(g, 0.0), P3) == 0.0

    def test_doubled_profile_not_a_solution(self, giant_101):
        _, U = giant_101
        scaled = U.with_values(2 * U.values)
        assert giant_residual(scaled, P3) > 1e-3

    def test_trivial_start_rejected_distinctly(self):
        g = build_grid(1, 0, 1, 31)
        with pytest.raises(TrivialSolutionError):
            solve_giant(g, P3, EllipticConfig(), w0_value=0.0)

    def test_flow_cross_check(self, giant_101):
        g, U = giant_101
        cfg = SolveConfig(dt=0.1, newton_tol=1e-11, newton_max=100)
        w = _flow(g, 1e3, cfg)
        assert np.max(np.abs(w.values - U.values)) / U.values.max() < 1e-3

    def test_two_starts_same_limit(self):
        g = build_grid(1, 0, 1, 51)
        cfg = SolveConfig(dt=0.1, newton_tol=1e-11, newton_max=100)
        a = _flow(g, 1e3, cfg)
        b = _flow(g, 1e4, cfg)
        assert np.max(np.abs(a.values - b.values)) / a.values.max() < 1e-3

    def test_domain_monotonicity(self, giant_101):
        g, U = giant_101
        g_small = build_grid(1, 0.2, 0.8, 61)
        U_small = solve_giant(g_small, P3, EllipticConfig(eps=0.0))
        big_on_small = np.interp(g_small.axes()[0], g.axes()[0], U.values)
        assert np.max(U_small.values - big_on_small) <= 1e-8

    def test_residual_consistency_under_refinement(self):
        # center-aligned grids: the sup-norm is carried by the degenerate peak
        # (the profile is only C^{1,1/2} there) and decreases slowly, while the
        # residual away from the peak decays at second order
        from plaplab._operators import div_flux

        sup_res, away_res = [], []
        for cells in (25, 51, 101):
            fine = build_grid(1, 0, 1, 2 * cells - 1)
            coarse = build_grid(1, 0, 1, cells)
            U_fine = solve_giant(fine, P3, EllipticConfig(eps=0.0))
            restricted = ScalarField(coarse, U_fine.values[::2])
            sup_res.append(giant_residual(restricted, P3))
            R = div_flux(restricted.values, coarse, 3.0, 0.0) + restricted.values
            interior = coarse.interior_mask()
            x = coarse.axes()[0][interior]
            away = np.abs(x - 0.5) > 0.05
            away_res.append(float(np.max(np.abs(R[interior])[away])))
        assert sup_res[0] > sup_res[1] > sup_res[2]
        assert away_res[1] < 0.5 * away_res[0]
        assert away_res[2] < 0.5 * away_res[1]

    def test_profile_is_time_slice_of_exact_solution(self, giant_101):
        # composite oracle: V(x,t) = t^{-1}U(x) built on the discrete profile
        # satisfies the pointwise finite-difference residual up to the
        # profile's own discrete residual plus interpolation error
        g, U = giant_101
        x_nodes = g.axes()[0]

        def v(x, t):
            return t ** (-1.0) * np.interp(x, x_nodes, U.values)

        res = abs(pde_residual(v, 0.31, 1.0, p=3.0, fd_steps=(g.h[0], 1e-4)))
        assert res < 50 * (giant_residual(U, P3) + g.h[0] ** 2)

    def test_2d_profile(self):
        g = build_grid(2, (0, 0), (1, 1), (41, 41))
        params = MediumParams(p=3.0, eps=0.0, n=2)
        U = solve_giant(g, params, EllipticConfig(eps=0.0), ds=0.2)
        assert U.values[g.interior_mask()].min() > 0
        assert giant_residual(U, params) < 1e-6


def _flow(g, w0, cfg):
    vals = np.full(g.shape, float(w0))
    vals[g.boundary_mask()] = 0.0
    w = ScalarField(g, vals)
    for _ in range(4000):
        w_new = rescaled_step(w, cfg, P3)
        if np.max(np.abs(w_new.values - w.values)) < 1e-9 * max(1.0, w_new.values.max()):
            return w_new
        w = w_new
    raise AssertionError("flow did not settle")
