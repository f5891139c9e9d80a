"""Implicit time stepping for the slow-diffusion evolution u_t = div(|grad u|^{p-2} grad u).

The scheme is the conservative face-flux discretization from ``_operators``
advanced by a theta-weighted implicit step (theta = 1, backward Euler, by
default).  Each step solves the nonlinear system by damped Newton with a
Picard fallback; the convergence tolerance is relative to the data scale so
that truncation ladders up to 1e6 behave like O(1) problems.

Besides plain cylinders the module marches space-time domains with an affine
activation surface: a node joins the computation at the first step boundary
past its activation time, switched on at the truncation value k, and acts as
a Dirichlet-k neighbor before that.  A zero slope reproduces the cylinder
march bit for bit.

``rescaled_step`` advances the flow w_s = div(|grad w|^{p-2} grad w) + w/(p-2)
obtained from the evolution by the substitution u = t^{-1/(p-2)} w(x, log t);
its steady state is the positive profile of the separable solution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from ._operators import (NewtonConvergenceError, SolverError, diffusivity,
                         div_flux, flux_jacobian, flux_term_scale, newton_solve)
from .grids import Grid, MediumParams, ScalarField, SlantedDomain

__all__ = [
    "SolveConfig",
    "BoundaryCondition",
    "Trajectory",
    "flux_coefficient",
    "step",
    "solve",
    "solve_slanted",
    "rescaled_step",
    "SolverError",
    "NewtonConvergenceError",
]

_SIDES_1D = ("x0", "x1")
_SIDES_2D = ("x0", "x1", "y0", "y1")


@dataclass(frozen=True)
class SolveConfig:
    """Time-stepping and nonlinear-solve parameters.

    ``first_step_ramp`` > 0 subdivides the first step into that many
    geometrically growing sub-steps, which tames the violent initial
    transient of large constant data without changing later stepping.
    """

    dt: float
    t_end: float = 0.0
    newton_tol: float = 1e-10
    newton_max: int = 40
    linear_tol: float = 1e-12
    theta: float = 1.0
    linear_solver: str = "direct"
    picard_after: int = 5
    first_step_ramp: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (self.newton_tol > 0 and self.linear_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")
        if self.newton_max < 1:
            raise ValueError("newton_max must be at least 1")
        if self.linear_solver not in ("direct", "cg"):
            raise ValueError("linear_solver must be 'direct' or 'cg'")


@dataclass(frozen=True)
class BoundaryCondition:
    """Per-side lateral condition: Dirichlet with a value (constant or
    ``f(x..., t)``) or zero-flux Neumann.  Corners where a Dirichlet side
    meets a Neumann side are Dirichlet."""

    sides: dict

    @staticmethod
    def dirichlet(value=0.0) -> "BoundaryCondition":
        return BoundaryCondition({s: ("dirichlet", value) for s in _SIDES_2D})

    @staticmethod
    def neumann() -> "BoundaryCondition":
        return BoundaryCondition({s: ("neumann", None) for s in _SIDES_2D})

    @staticmethod
    def mixed(**sides) -> "BoundaryCondition":
        out = {}
        for name, spec in sides.items():
            if name not in _SIDES_2D:
                raise ValueError(f"unknown side {name!r}")
            if spec == "neumann":
                out[name] = ("neumann", None)
            else:
                out[name] = ("dirichlet", spec)
        return BoundaryCondition(out)

    def _side_names(self, grid: Grid):
        names = _SIDES_1D if grid.n == 1 else _SIDES_2D
        for name in names:
            if name not in self.sides:
                raise ValueError(f"boundary condition missing side {name!r}")
        return names

    def _side_slab(self, grid: Grid, name: str):
        axis = 0 if name[0] == "x" else 1
        sl = [slice(None)] * grid.n
        sl[axis] = 0 if name[1] == "0" else -1
        return tuple(sl)

    def dirichlet_mask(self, grid: Grid) -> np.ndarray:
        mask = np.zeros(grid.shape, dtype=bool)
        for name in self._side_names(grid):
            if self.sides[name][0] == "dirichlet":
                mask[self._side_slab(grid, name)] = True
        return mask

    def dirichlet_values(self, grid: Grid, t: float) -> np.ndarray:
        """Full-grid array whose entries are meaningful on the Dirichlet mask."""
        values = np.zeros(grid.shape)
        mesh = grid.meshgrid()
        for name in self._side_names(grid):
            kind, val = self.sides[name]
            if kind != "dirichlet":
                continue
            slab = self._side_slab(grid, name)
            if callable(val):
                full = np.broadcast_to(np.asarray(val(*mesh, t), dtype=float), grid.shape)
                values[slab] = full[slab]
            else:
                values[slab] = float(val)
        return values


@dataclass(frozen=True)
class Trajectory:
    """Recorded snapshots of a march, plus per-step diagnostics and optional
    per-probe time series sampled at every step boundary."""

    times: np.ndarray
    snapshots: list
    diagnostics: list = field(default_factory=list)
    probe_times: np.ndarray | None = None
    probe_series: dict | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("snapshot times must be strictly increasing")
        grids = {s.grid for s in self.snapshots}
        if len(grids) > 1:
            raise ValueError("snapshots must share one grid")
        object.__setattr__(self, "times", t)

    @property
    def final(self) -> ScalarField:
        return self.snapshots[-1]

    def diagnostics_jsonl(self) -> str:
        return "\n".join(json.dumps(d, sort_keys=True) for d in self.diagnostics)


def flux_coefficient(grad_norm_sq, params: MediumParams):
    """Face diffusivity (|grad u|^2 + eps^2)^{(p-2)/2} from the squared gradient norm."""
    q = np.asarray(grad_norm_sq, dtype=float) + params.eps ** 2
    if np.any(q < 0):
        raise ValueError("grad_norm_sq must be nonnegative")
    out = diffusivity(q, params.p)
    return float(out) if np.isscalar(grad_norm_sq) else out


def _implicit_step(u: np.ndarray, grid: Grid, params: MediumParams, dt: float,
                   config: SolveConfig, pin_mask: np.ndarray, pin_values: np.ndarray,
                   source_coef: float = 0.0):
    """One theta-weighted implicit step; pinned nodes are held at pin_values."""
    theta = config.theta
    if theta * dt * source_coef >= 1.0:
        raise ValueError("dt too large for the zeroth-order source; need theta*dt < p-2")
    p, eps = params.p, params.eps
    shape = grid.shape
    N = grid.num_nodes
    pin_flat = pin_mask.ravel()
    pv_flat = pin_values.ravel()
    free_diag = sp.diags((~pin_flat).astype(float), format="csr")
    pin_diag = sp.diags(pin_flat.astype(float), format="csr")
    eye = sp.eye(N, format="csr")

    if theta < 1.0:
        F_old = div_flux(u, grid, p, eps) + source_coef * u
    else:
        F_old = 0.0

    def residual(vf):
        v = vf.reshape(shape)
        Fv = div_flux(v, grid, p, eps) + source_coef * v
        R = v - u - dt * (theta * Fv + (1.0 - theta) * F_old)
        Rf = R.ravel()
        Rf[pin_flat] = vf[pin_flat] - pv_flat[pin_flat]
        return Rf

    def jacobian(vf, picard=False):
        v = vf.reshape(shape)
        Jd = flux_jacobian(v, grid, p, eps, picard=picard)
        J = (1.0 - dt * theta * source_coef) * eye - dt * theta * Jd
        return free_diag @ J + pin_diag

    v0 = u.ravel().copy()
    v0[pin_flat] = pv_flat[pin_flat]
    scale = max(1.0, float(np.max(np.abs(u))))
    if pin_flat.any():
        scale = max(scale, float(np.max(np.abs(pv_flat[pin_flat]))))

    old_term = dt * (1.0 - theta) * flux_term_scale(u, grid, p, eps) if theta < 1.0 else 0.0
    mach = float(np.finfo(float).eps)

    def residual_floor(vf):
        term = dt * theta * flux_term_scale(vf.reshape(shape), grid, p, eps)
        return 128.0 * mach * (scale + term + old_term)

    v, info = newton_solve(
        residual, lambda w: jacobian(w, picard=False), lambda w: jacobian(w, picard=True),
        v0, tol=config.newton_tol * scale, max_iter=config.newton_max,
        picard_after=config.picard_after, linear_method=config.linear_solver,
        linear_tol=config.linear_tol, floor_fn=residual_floor)
    return v.reshape(shape), info


def _ramp_fractions(r: int, growth: float = 4.0) -> np.ndarray:
    w = growth ** np.arange(r)
    return w / w.sum()


def step(u: ScalarField, bc: BoundaryCondition, t: float, config: SolveConfig,
         params: MediumParams) -> ScalarField:
    """Advance one implicit step from t to t + dt on the cylinder."""
    grid = u.grid
    if params.n != grid.n:
        raise ValueError("params.n must match grid.n")
    t_new = t + config.dt
    pin_mask = bc.dirichlet_mask(grid)
    pin_values = bc.dirichlet_values(grid, t_new)
    # theta < 1 needs the old state to carry its own boundary values already
    new, _ = _implicit_step(u.values, grid, params, config.dt, config, pin_mask, pin_values)
    return u.with_values(new)


def _step_boundaries(t0: float, t_end: float, dt: float):
    """Uniform boundaries t0 + m*dt with the final step shortened to t_end."""
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    n_full = int(math.floor((t_end - t0) / dt + 1e-9))
    times = [t0 + m * dt for m in range(n_full + 1)]
    if times[-1] < t_end - 1e-9 * dt:
        times.append(t_end)
    else:
        times[-1] = t_end
    return np.array(times)


def _march(grid: Grid, u0: np.ndarray, bc: BoundaryCondition, t0: float,
           config: SolveConfig, params: MediumParams, record_times=None,
           probe_nodes=None, activation: np.ndarray | None = None,
           k: float = 0.0):
    """Core time loop shared by cylinder and slanted solves.

    With ``activation`` given, a node whose activation step has not been
    reached is pinned to k; it enters as an unknown one step after the first
    boundary at or past its activation time (where it is switched on at k).
    """
    boundaries = _step_boundaries(t0, config.t_end, config.dt)
    nsteps = len(boundaries) - 1

    lateral_mask = bc.dirichlet_mask(grid)
    if activation is not None:
        act_step = np.ceil((activation - t0) / config.dt - 1e-9).astype(int)
        act_step = np.maximum(act_step, 0)
        u = np.where(act_step > 0, k, u0)
    else:
        act_step = None
        u = u0.copy()

    if record_times is None:
        record_idx = {0, nsteps}
    else:
        record_idx = set()
        for rt in record_times:
            if rt < t0 - 1e-9 or rt > boundaries[-1] + 1e-9:
                raise ValueError(f"record time {rt} outside [{t0}, {boundaries[-1]}]")
            record_idx.add(int(np.argmin(np.abs(boundaries - rt))))

    probes = list(probe_nodes) if probe_nodes else []
    probe_data = {tuple(np.atleast_1d(pn)): [u[tuple(np.atleast_1d(pn))]] for pn in probes}

    times, snaps, diags = [], [], []
    if 0 in record_idx:
        times.append(boundaries[0])
        snaps.append(ScalarField(grid, u.copy()))

    for m in range(nsteps):
        t_new = boundaries[m + 1]
        dt_m = t_new - boundaries[m]
        if act_step is not None:
            inactive = act_step > m
            pin_mask = inactive | (lateral_mask & ~inactive)
            pin_values = np.where(inactive, k, bc.dirichlet_values(grid, t_new))
        else:
            pin_mask = lateral_mask
            pin_values = bc.dirichlet_values(grid, t_new)

        if m == 0 and config.first_step_ramp > 0:
            t_sub = boundaries[0]
            total_iters = 0
            for frac in _ramp_fractions(config.first_step_ramp):
                dt_sub = dt_m * frac
                t_sub += dt_sub
                lateral_vals = bc.dirichlet_values(grid, t_sub)
                if act_step is not None:
                    pv = np.where(act_step > m, k, lateral_vals)
                else:
                    pv = lateral_vals
                u, info = _implicit_step(u, grid, params, dt_sub, config, pin_mask, pv)
                total_iters += info["iterations"]
            info = {"iterations": total_iters, "residual": info["residual"], "mode": info["mode"]}
        else:
            u, info = _implicit_step(u, grid, params, dt_m, config, pin_mask, pin_values)
        diags.append({"step": m, "t": float(t_new), "newton_iterations": info["iterations"],
                      "residual": info["residual"], "mode": info["mode"]})
        for pn in probe_data:
            probe_data[pn].append(u[pn])
        if (m + 1) in record_idx:
            times.append(t_new)
            snaps.append(ScalarField(grid, u.copy()))

    return Trajectory(
        times=np.array(times), snapshots=snaps, diagnostics=diags,
        probe_times=boundaries if probes else None,
        probe_series={pn: np.array(v) for pn, v in probe_data.items()} if probes else None)


def solve(u0: ScalarField, bc: BoundaryCondition, t0: float, config: SolveConfig,
          params: MediumParams, record_times=None, probe_nodes=None) -> Trajectory:
    """March the cylinder problem from t0 to config.t_end, recording snapshots
    at the step boundaries nearest the requested times."""
    if params.n != u0.grid.n:
        raise ValueError("params.n must match grid.n")
    return _march(u0.grid, u0.values.copy(), bc, t0, config, params,
                  record_times=record_times, probe_nodes=probe_nodes)


def solve_slanted(domain: SlantedDomain, k: float, lateral_bc: BoundaryCondition,
                  config: SolveConfig, params: MediumParams, record_times=None,
                  probe_nodes=None) -> Trajectory:
    """March the slanted domain with truncation data k on the activation surface.

    Nodes are switched on at value k at the first step boundary past their
    activation time and act as Dirichlet-k neighbors before that.  With zero
    slope this reproduces ``solve`` with constant data k exactly.
    """
    if k <= 0:
        raise ValueError("truncation constant k must be positive")
    if params.n != domain.grid.n:
        raise ValueError("params.n must match grid.n")
    cfg = config if config.t_end else replace(config, t_end=domain.T)
    if cfg.t_end > domain.T + 1e-12:
        raise ValueError("config.t_end must not exceed the domain end time")
    u0 = np.full(domain.grid.shape, float(k))
    return _march(domain.grid, u0, lateral_bc, domain.t0, cfg, params,
                  record_times=record_times, probe_nodes=probe_nodes,
                  activation=domain.activation, k=float(k))


def rescaled_step(w: ScalarField, config: SolveConfig, params: MediumParams) -> ScalarField:
    """One implicit step of w_s = div(|grad w|^{p-2} grad w) + w/(p-2) with
    zero lateral data; the positive steady state is the separable profile."""
    grid = w.grid
    if params.n != grid.n:
        raise ValueError("params.n must match grid.n")
    if w.values.min() < -1e-12 * max(1.0, abs(w.values).max()):
        raise ValueError("rescaled flow expects nonnegative data")
    pin_mask = grid.boundary_mask()
    pin_values = np.zeros(grid.shape)
    source = 1.0 / (params.p - 2.0)
    new, _ = _implicit_step(w.values, grid, params, config.dt, config,
                            pin_mask, pin_values, source_coef=source)
    return w.with_values(new)
