"""Dirichlet solvers for the p-Laplacian.

Two stationary problems back the experiments:

* ``solve_p_harmonic``: div(|grad w|^{p-2} grad w) = 0 on a node region with
  prescribed values on its Dirichlet frame.  This is the barrier of the
  slanted-domain argument: on the lower half of a small ball, 0 on the outer
  shell and 1 on the level-plane interface.

* ``solve_giant``: the positive profile U with zero boundary data solving
  div(|grad U|^{p-2} grad U) + U/(p-2) = 0, i.e. the steady state of the
  rescaled flow.  U is found by driving the rescaled flow from a large
  constant (whose basin avoids the trivial zero branch) and polished by
  Newton on the stationary system.

Newton on the degenerate p > 2 operator starts from the linear (p = 2)
solution and continues in the regularization eps, which is reduced
geometrically to its target.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from ._operators import (NewtonConvergenceError, TrivialSolutionError,
                         diffusivity, div_flux, flux_jacobian, flux_term_scale,
                         newton_solve)
from .exact import PlateauBump
from .grids import Grid, HalfBallPartition, MediumParams, ScalarField
from .parabolic import SolveConfig, rescaled_step

__all__ = [
    "EllipticConfig",
    "solve_p_harmonic",
    "solve_barrier",
    "solve_giant",
    "giant_residual",
    "TrivialSolutionError",
]


@dataclass(frozen=True)
class EllipticConfig:
    newton_tol: float = 1e-10
    newton_max: int = 60
    linear_tol: float = 1e-12
    eps: float = 0.0
    continuation_steps: int = 6

    def __post_init__(self):
        if not (self.newton_tol > 0 and self.linear_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.continuation_steps < 1:
            raise ValueError("continuation_steps must be >= 1")


def _exponent(params) -> float:
    """MediumParams (p > 2) or a bare exponent (p > 1, for the linear cross-check)."""
    p = params.p if isinstance(params, MediumParams) else float(params)
    if not p > 1:
        raise ValueError(f"requires p > 1; got p = {p}")
    return p


def _region(region) -> tuple[Grid, np.ndarray]:
    if isinstance(region, HalfBallPartition):
        return region.grid, region.unknowns
    if isinstance(region, Grid):
        return region, region.interior_mask()
    grid, mask = region
    return grid, np.asarray(mask, dtype=bool)


def _elliptic_newton(grid: Grid, v0: np.ndarray, unknown_mask: np.ndarray,
                     bv: np.ndarray, p: float, eps: float, config: EllipticConfig,
                     source_coef: float = 0.0):
    """Newton on div_flux(v) + source_coef*v = 0 over the unknowns, v = bv elsewhere."""
    shape = grid.shape
    N = grid.num_nodes
    pin_flat = (~unknown_mask).ravel()
    bv_flat = bv.ravel()
    free_diag = sp.diags((~pin_flat).astype(float), format="csr")
    pin_diag = sp.diags(pin_flat.astype(float), format="csr")
    eye = sp.eye(N, format="csr")

    def residual(vf):
        v = vf.reshape(shape)
        R = div_flux(v, grid, p, eps) + source_coef * v
        Rf = R.ravel()
        Rf[pin_flat] = vf[pin_flat] - bv_flat[pin_flat]
        return Rf

    def jacobian(vf, picard=False):
        v = vf.reshape(shape)
        J = flux_jacobian(v, grid, p, eps, picard=picard) + source_coef * eye
        return free_diag @ J + pin_diag

    start = v0.ravel().copy()
    start[pin_flat] = bv_flat[pin_flat]
    mach = float(np.finfo(float).eps)

    def residual_floor(vf):
        return 128.0 * mach * flux_term_scale(vf.reshape(shape), grid, p, eps)

    v, info = newton_solve(
        residual, lambda w: jacobian(w, False), lambda w: jacobian(w, True),
        start, tol=config.newton_tol, max_iter=config.newton_max,
        linear_method="direct", linear_tol=config.linear_tol, floor_fn=residual_floor)
    return v.reshape(shape), info


def solve_p_harmonic(region, boundary_values, params, config: EllipticConfig | None = None) -> ScalarField:
    """Discrete p-harmonic function on a node region with Dirichlet frame data.

    ``region`` is a Grid (unknowns = interior), a HalfBallPartition (unknowns
    = lower half minus its shell), or an explicit (grid, mask) pair.
    ``boundary_values`` is a full-grid array/field read at the pinned nodes.
    ``params`` may be MediumParams or a bare exponent; p > 1 is accepted here
    so the p = 2 case can serve as a linear cross-check.
    """
    config = config or EllipticConfig()
    grid, unknown_mask = _region(region)
    p = _exponent(params)
    bv = boundary_values.values if isinstance(boundary_values, ScalarField) else np.asarray(boundary_values, dtype=float)
    bv = np.broadcast_to(bv, grid.shape).astype(float)

    # linear initial guess, then continue in eps down to the target
    guess, _ = _elliptic_newton(grid, bv.copy(), unknown_mask, bv, 2.0, 0.0, config)
    if p == 2.0:
        return ScalarField(grid, guess)

    span = float(bv[~unknown_mask].max() - bv[~unknown_mask].min()) if (~unknown_mask).any() else 0.0
    extent = min(grid.hi[d] - grid.lo[d] for d in range(grid.n))
    g_scale = max(span / extent, 1e-6)
    eps_floor = max(config.eps, 1e-9 * g_scale)
    stages = list(np.geomspace(0.1 * g_scale, eps_floor, config.continuation_steps))
    if config.eps < eps_floor:
        stages.append(config.eps)

    v = guess
    for eps in stages:
        v, _ = _elliptic_newton(grid, v, unknown_mask, bv, p, float(eps), config)
    return ScalarField(grid, v)


def solve_barrier(partition: HalfBallPartition, params, config: EllipticConfig | None = None,
                  plateau_frac: float | None = None) -> ScalarField:
    """Barrier of the slanted-domain argument: p-harmonic on the lower half
    ball, 0 on the outer shell, 1 on the interface.

    ``plateau_frac`` rounds off the interface data: full value only within
    that fraction of the ball radius around the center (measured along the
    interface), decaying smoothly to zero toward the rim.
    """
    grid = partition.grid
    bv = np.zeros(grid.shape)
    if plateau_frac is None:
        bv[partition.interface] = 1.0
    else:
        if not 0 < plateau_frac < 1:
            raise ValueError("plateau_frac must lie in (0, 1)")
        mesh = grid.meshgrid()
        nrm = np.array(partition.normal, dtype=float)
        nrm = nrm / np.linalg.norm(nrm)
        delta = [mesh[d] - partition.x0[d] for d in range(grid.n)]
        s = sum(nrm[d] * delta[d] for d in range(grid.n))
        tang_sq = sum(delta[d] * delta[d] for d in range(grid.n)) - s * s
        tang = np.sqrt(np.maximum(tang_sq, 0.0))
        profile = PlateauBump(inner=plateau_frac * partition.r, outer=partition.r)
        bv[partition.interface] = profile(tang[partition.interface])
    return solve_p_harmonic(partition, bv, params, config)


def solve_giant(grid: Grid, params: MediumParams, config: EllipticConfig | None = None,
                w0_value: float = 100.0, ds: float = 0.1, flow_tol: float | None = None,
                flow_max_steps: int = 5000, polish: bool = True) -> ScalarField:
    """Positive steady profile of the rescaled flow with zero boundary data.

    The flow is driven from the constant ``w0_value`` until successive states
    agree to ``flow_tol`` in sup norm (the zero solution also satisfies the
    stationary equation, but the flow from a positive constant cannot reach
    it); Newton on the stationary system then polishes the limit.
    """
    config = config or EllipticConfig()
    if not params.p > 2:
        raise ValueError("requires p > 2")
    flow_tol = config.newton_tol if flow_tol is None else flow_tol
    flow_cfg = SolveConfig(dt=ds, t_end=ds, newton_tol=min(1e-10, flow_tol),
                           newton_max=400, linear_tol=config.linear_tol)
    flow_params = replace(params, eps=max(params.eps, config.eps))

    w = ScalarField.constant(grid, float(w0_value))
    bmask = grid.boundary_mask()
    vals = w.values.copy()
    vals[bmask] = 0.0
    w = w.with_values(vals)

    for _ in range(flow_max_steps):
        w_new = rescaled_step(w, flow_cfg, flow_params)
        delta = float(np.max(np.abs(w_new.values - w.values)))
        w = w_new
        if w.values.max() < 1e-12:
            raise TrivialSolutionError(
                "rescaled flow collapsed to the zero branch; start from a positive constant")
        if delta < flow_tol * max(1.0, float(w.values.max())):
            break
    else:
        raise NewtonConvergenceError("rescaled flow did not settle", delta, flow_max_steps)

    if polish:
        try:
            v, _ = _elliptic_newton(grid, w.values.copy(), grid.interior_mask(),
                                    np.zeros(grid.shape), params.p, config.eps, config,
                                    source_coef=1.0 / (params.p - 2.0))
            w = w.with_values(np.maximum(v, 0.0))
        except NewtonConvergenceError:
            if giant_residual(w, params) >= config.newton_tol:
                raise

    # the boundary values are data; scrub direct-solver roundoff there
    vals = w.values.copy()
    vals[bmask] = 0.0
    w = w.with_values(vals)
    if w.values.max() < 1e-12:
        raise TrivialSolutionError("stationary solve returned the zero branch")
    return w


def giant_residual(U: ScalarField, params: MediumParams) -> float:
    """Sup norm over interior nodes of div(|grad U|^{p-2} grad U) + U/(p-2),
    assembled directly from face differences (independent of the solver path)."""
    grid = U.grid
    p = params.p
    u = U.values
    total = np.zeros(grid.shape)
    for d in range(grid.n):
        h = grid.h[d]
        lo = [slice(None)] * grid.n
        hi = [slice(None)] * grid.n
        lo[d] = slice(None, -1)
        hi[d] = slice(1, None)
        gn = (u[tuple(hi)] - u[tuple(lo)]) / h
        q = gn * gn
        if grid.n == 2:
            other = 1 - d
            tg = np.gradient(u, grid.h[other], axis=other)
            gt = 0.5 * (tg[tuple(lo)] + tg[tuple(hi)])
            q = q + gt * gt
        flux = diffusivity(q, p) * gn
        inner_lo = [slice(None)] * grid.n
        inner_hi = [slice(None)] * grid.n
        inner_lo[d] = slice(None, -1)
        inner_hi[d] = slice(1, None)
        core = [slice(None)] * grid.n
        core[d] = slice(1, -1)
        total[tuple(core)] += (flux[tuple(inner_hi)] - flux[tuple(inner_lo)]) / h
    total += u / (p - 2.0)
    interior = grid.interior_mask()
    return float(np.max(np.abs(total[interior])))
