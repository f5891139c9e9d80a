"""Conservative face-flux discretization of div(|grad u|^{p-2} grad u) and the
damped-Newton/Picard driver shared by the parabolic and elliptic solvers.

Faces sit between node pairs along each axis.  The face diffusivity comes
from the face-centered gradient: exact normal difference plus, in 2D, the
average of the two adjacent central tangential differences.  Divergence at a
node divides the face-flux difference by the node's per-axis volume (h
inside, h/2 on the rim), so that with zero boundary fluxes the scheme
telescopes to exact mass conservation under tensor-trapezoid weights.

The Jacobian is exact in the normal direction and freezes the tangential
contribution to the face gradient norm; together with an Armijo line search
and a Picard (frozen-diffusivity) fallback this is robust across the
degenerate p > 2 regime, including truncation data of size 1e6.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve

from .grids import Grid

__all__ = [
    "SolverError",
    "NewtonConvergenceError",
    "LinearSolverError",
    "TrivialSolutionError",
    "diffusivity",
    "diffusivity_slope",
    "div_flux",
    "flux_jacobian",
    "newton_solve",
    "solve_linear",
]


class SolverError(RuntimeError):
    pass


class NewtonConvergenceError(SolverError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class LinearSolverError(SolverError):
    pass


class TrivialSolutionError(SolverError):
    pass


def diffusivity(q: np.ndarray, p: float) -> np.ndarray:
    """(q)^{(p-2)/2} with q = |grad|^2 + eps^2, safe at q = 0 for p >= 2."""
    if p == 2.0:
        return np.ones_like(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.power(q, (p - 2.0) / 2.0)
    return np.where(q > 0, a, 0.0)


def diffusivity_slope(gn: np.ndarray, q: np.ndarray, p: float) -> np.ndarray:
    """d(flux)/d(normal gradient) at a face: q^{(p-4)/2} ((p-1) gn^2 + (q - gn^2)).

    ``q - gn^2`` carries the frozen tangential-plus-eps part of the norm.
    """
    if p == 2.0:
        return np.ones_like(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.power(q, (p - 4.0) / 2.0) * ((p - 1.0) * gn * gn + (q - gn * gn))
    return np.where(q > 0, w, 0.0)


def _face_data(u: np.ndarray, grid: Grid, d: int, eps: float):
    """Normal gradient and squared norm of the face-centered gradient for the
    faces along axis d."""
    h = grid.h[d]
    sl_lo = [slice(None)] * grid.n
    sl_hi = [slice(None)] * grid.n
    sl_lo[d] = slice(None, -1)
    sl_hi[d] = slice(1, None)
    gn = (u[tuple(sl_hi)] - u[tuple(sl_lo)]) / h
    q = gn * gn + eps * eps
    if grid.n == 2:
        other = 1 - d
        tang = np.gradient(u, grid.h[other], axis=other)
        gt = 0.5 * (tang[tuple(sl_lo)] + tang[tuple(sl_hi)])
        q = q + gt * gt
    return gn, q


def _axis_volumes(grid: Grid, d: int) -> np.ndarray:
    """Per-node divisor along axis d: h inside, h/2 on the axis rim."""
    v = np.full(grid.cells[d], grid.h[d])
    v[0] *= 0.5
    v[-1] *= 0.5
    shape = [1] * grid.n
    shape[d] = grid.cells[d]
    return np.broadcast_to(v.reshape(shape), grid.shape)


def flux_term_scale(u: np.ndarray, grid: Grid, p: float, eps: float) -> float:
    """Magnitude of the largest per-node flux-divergence contribution; the
    round-off floor of a residual built from div_flux is a small multiple of
    machine epsilon times this."""
    out = 0.0
    for d in range(grid.n):
        gn, q = _face_data(u, grid, d, eps)
        fmax = float(np.max(np.abs(diffusivity(q, p) * gn))) if gn.size else 0.0
        out = max(out, fmax / (0.5 * grid.h[d]))
    return out


def div_flux(u: np.ndarray, grid: Grid, p: float, eps: float) -> np.ndarray:
    """Discrete div(diffusivity * grad u) with zero flux through the box rim.

    Rows at Dirichlet-pinned nodes are discarded by the callers, so the rim
    treatment only matters for flux (Neumann) boundaries.
    """
    out = np.zeros(grid.shape)
    for d in range(grid.n):
        gn, q = _face_data(u, grid, d, eps)
        flux = diffusivity(q, p) * gn
        pad = [(0, 0)] * grid.n
        pad[d] = (1, 1)
        padded = np.pad(flux, pad)
        sl_hi = [slice(None)] * grid.n
        sl_lo = [slice(None)] * grid.n
        sl_hi[d] = slice(1, None)
        sl_lo[d] = slice(None, -1)
        out += (padded[tuple(sl_hi)] - padded[tuple(sl_lo)]) / _axis_volumes(grid, d)
    return out


def flux_jacobian(u: np.ndarray, grid: Grid, p: float, eps: float,
                  picard: bool = False) -> sp.csr_matrix:
    """Sparse d(div_flux)/du.  ``picard`` freezes the diffusivity entirely."""
    N = grid.num_nodes
    idx = np.arange(N).reshape(grid.shape)
    rows, cols, data = [], [], []
    for d in range(grid.n):
        gn, q = _face_data(u, grid, d, eps)
        w = diffusivity(q, p) if picard else diffusivity_slope(gn, q, p)
        w = w / grid.h[d]
        sl_lo = [slice(None)] * grid.n
        sl_hi = [slice(None)] * grid.n
        sl_lo[d] = slice(None, -1)
        sl_hi[d] = slice(1, None)
        A = idx[tuple(sl_lo)].ravel()
        B = idx[tuple(sl_hi)].ravel()
        vols = _axis_volumes(grid, d)
        va = vols[tuple(sl_lo)].ravel()
        vb = vols[tuple(sl_hi)].ravel()
        wf = w.ravel()
        # face flux F = w * (u_B - u_A); div_A += F / va, div_B -= F / vb
        rows.extend([A, A, B, B])
        cols.extend([A, B, B, A])
        data.extend([-wf / va, wf / va, -wf / vb, wf / vb])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    return sp.csr_matrix((data, (rows, cols)), shape=(N, N))


def solve_linear(J: sp.csr_matrix, rhs: np.ndarray, method: str = "direct",
                 tol: float = 1e-12) -> np.ndarray:
    if method == "cg":
        M = sp.diags(1.0 / np.maximum(np.abs(J.diagonal()), 1e-300))
        x, info = cg(J, rhs, rtol=tol, atol=0.0, M=M, maxiter=10 * rhs.size)
        if info != 0:
            raise LinearSolverError(f"cg failed to converge (info={info})")
        return x
    x = spsolve(J.tocsc(), rhs)
    if not np.all(np.isfinite(x)):
        raise LinearSolverError("direct sparse solve returned non-finite values")
    return x


def newton_solve(residual_fn, jacobian_fn, picard_jacobian_fn, v0: np.ndarray,
                 tol: float, max_iter: int, picard_after: int = 5,
                 linear_method: str = "direct", linear_tol: float = 1e-12,
                 floor_fn=None):
    """Damped Newton on residual_fn(v) = 0 with Picard fallback.

    Line search halves the step until the sup-norm residual decreases; after
    ``picard_after`` consecutive stalls the Jacobian switches to the frozen
    diffusivity matrix for the remaining iterations.  ``floor_fn(v)`` gives
    the round-off floor of the residual evaluation at v (large face fluxes
    cancel against each other); when progress stops at or below that floor
    the iterate is accepted, since float64 cannot certify anything smaller.
    Returns (v, info dict); raises NewtonConvergenceError otherwise.
    """
    v = v0.copy()
    r = residual_fn(v)
    rnorm = float(np.max(np.abs(r)))
    stalls = 0
    mode = "newton"

    def at_floor():
        return floor_fn is not None and rnorm <= floor_fn(v)

    for it in range(max_iter):
        if rnorm < tol:
            return v, {"iterations": it, "residual": rnorm, "mode": mode}
        if not np.isfinite(rnorm):
            raise NewtonConvergenceError("non-finite residual", rnorm, it)
        jac = jacobian_fn(v) if mode == "newton" else picard_jacobian_fn(v)
        try:
            delta = solve_linear(jac, -r, method=linear_method, tol=linear_tol)
        except LinearSolverError:
            if mode == "newton":
                mode = "picard"
                continue
            raise
        alpha = 1.0
        improved = False
        for _ in range(12):
            v_try = v + alpha * delta
            r_try = residual_fn(v_try)
            rnorm_try = float(np.max(np.abs(r_try)))
            if np.isfinite(rnorm_try) and rnorm_try < rnorm * (1.0 - 1e-4 * alpha):
                v, r, rnorm = v_try, r_try, rnorm_try
                improved = True
                break
            alpha *= 0.5
        if not improved:
            if at_floor():
                return v, {"iterations": it + 1, "residual": rnorm, "mode": "floor"}
            stalls += 1
            if mode == "newton" and stalls >= picard_after:
                mode = "picard"
                stalls = 0
            elif mode == "picard":
                raise NewtonConvergenceError("line search stalled", rnorm, it + 1)
        else:
            stalls = 0
    if rnorm < tol or at_floor():
        return v, {"iterations": max_iter, "residual": rnorm, "mode": mode}
    raise NewtonConvergenceError("iteration cap reached", rnorm, max_iter)
