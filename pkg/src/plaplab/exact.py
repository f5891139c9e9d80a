"""Closed-form solutions and residual oracles for u_t = div(|grad u|^{p-2} grad u), p > 2.

Two exact objects anchor every solver test:

* the source-type self-similar (Barenblatt) solution

      B(x,t) = t^{-n/L} { C - (p-2)/p * L^{1/(1-p)} (|x| t^{-1/L})^{p/(p-1)} }_+^{(p-1)/(p-2)},
      L = n(p-2) + p,

  compactly supported with an expanding front, whose initial trace is a point
  mass, and

* the separable solution V(x,t) = t^{-1/(p-2)} U(x), whose profile U solves
  the stationary equation with zeroth-order source U/(p-2) (computed by the
  elliptic module; here only the time factor is applied).

The residual oracle ``pde_residual`` checks any smooth candidate against the
PDE by nested central differences and is deliberately independent of the grid
solver's discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import ScalarField

__all__ = [
    "BarenblattParams",
    "SeparableSolution",
    "PlateauBump",
    "barenblatt_eval",
    "barenblatt_front_radius",
    "barenblatt_mass",
    "dirac_trace_test",
    "separable_eval",
    "separable_field",
    "pde_residual",
    "integrate_midpoint",
]


@dataclass(frozen=True)
class BarenblattParams:
    """Dimension, exponent and free constant of the self-similar source solution."""

    n: int
    p: float
    C: float
    lam: float = field(init=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")
        if not self.p > 2:
            raise ValueError(f"requires p > 2; got p = {self.p}")
        if not self.C > 0:
            raise ValueError("C must be positive")
        object.__setattr__(self, "lam", self.n * (self.p - 2) + self.p)


def _radius(params: BarenblattParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if params.n == 1:
        return np.abs(x)
    if x.shape[-1] != params.n:
        raise ValueError(f"points must have trailing dimension {params.n}")
    return np.sqrt(np.sum(x * x, axis=-1))


def barenblatt_eval(params: BarenblattParams, x, t: float):
    """Evaluate the self-similar source solution; zero outside its support ball."""
    if t <= 0:
        raise ValueError("t must be positive")
    p, n, lam, C = params.p, params.n, params.lam, params.C
    r = _radius(params, x)
    xi = r * t ** (-1.0 / lam)
    bracket = C - (p - 2) / p * lam ** (1.0 / (1.0 - p)) * xi ** (p / (p - 1.0))
    val = t ** (-n / lam) * np.maximum(bracket, 0.0) ** ((p - 1.0) / (p - 2.0))
    return float(val) if np.isscalar(x) or np.asarray(x).ndim == 0 else val


def barenblatt_front_radius(params: BarenblattParams, t: float) -> float:
    """Radius of the support ball at time t (where the bracket vanishes)."""
    if t <= 0:
        raise ValueError("t must be positive")
    p, lam, C = params.p, params.lam, params.C
    return t ** (1.0 / lam) * (C * p / (p - 2)) ** ((p - 1.0) / p) * lam ** (1.0 / p)


def integrate_midpoint(fn, lo, hi, n0: int = 64, rel_tol: float = 1e-8,
                       max_rounds: int = 16) -> float:
    """Composite midpoint rule over a box, doubled until two successive
    refinements agree to ``rel_tol`` relative.  ``fn`` takes an array of
    points (1D: shape (m,), 2D: shape (m, 2)) and returns values."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    ndim = lo.size
    m = int(n0)
    prev = None
    for _ in range(max_rounds):
        axes = [lo[d] + (hi[d] - lo[d]) * (np.arange(m) + 0.5) / m for d in range(ndim)]
        cell = np.prod((hi - lo) / m)
        if ndim == 1:
            total = float(np.sum(fn(axes[0])) * cell)
        else:
            xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
            pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
            total = float(np.sum(fn(pts)) * cell)
        if prev is not None:
            scale = max(abs(total), abs(prev), 1e-300)
            if abs(total - prev) <= rel_tol * scale:
                return total
        prev = total
        m *= 2
    return prev


def barenblatt_mass(params: BarenblattParams, t: float, n0: int = 64,
                    rel_tol: float = 1e-8) -> float:
    """Integral of the source solution at time t by midpoint quadrature over
    its support box.  Constant in t; this operational value plays the role of
    the point-mass weight of the initial trace."""
    if t <= 0:
        raise ValueError("t must be positive")
    R = barenblatt_front_radius(params, t)
    lo = [-R] * params.n
    hi = [R] * params.n
    return integrate_midpoint(lambda x: barenblatt_eval(params, x, t), lo, hi,
                              n0=n0, rel_tol=rel_tol)


@dataclass(frozen=True)
class PlateauBump:
    """Smooth compactly supported test function, radially symmetric about
    ``center``: constant ``height`` for r <= inner, C-infinity decay to zero
    at r = outer.  ``inner = 0`` gives a plain bump with a strict maximum."""

    inner: float
    outer: float
    height: float = 1.0
    center: tuple[float, ...] | float = 0.0

    def __post_init__(self):
        if not (0 <= self.inner < self.outer):
            raise ValueError("need 0 <= inner < outer")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if x.ndim <= 1 and center.size == 1:
            r = np.abs(x - center[0])
        else:
            r = np.sqrt(np.sum((x - center) ** 2, axis=-1))
        theta = (r - self.inner) / (self.outer - self.inner)
        theta = np.clip(theta, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            f = np.where(theta > 0, np.exp(-1.0 / np.maximum(theta, 1e-300)), 0.0)
            g = np.where(theta < 1, np.exp(-1.0 / np.maximum(1 - theta, 1e-300)), 0.0)
        return self.height * g / (f + g)

    def value_at_origin_of(self, params: BarenblattParams) -> float:
        zero = 0.0 if params.n == 1 else np.zeros(params.n)
        return float(self(zero))


def dirac_trace_test(params: BarenblattParams, phi, t_sequence,
                     rel_tol: float = 1e-8) -> np.ndarray:
    """Integral of B(.,t) * phi per t in the sequence.

    As t decreases to zero the values converge to (mass of B) * phi(0): the
    initial trace acts as a point mass at the origin on test functions.
    """
    out = []
    for t in t_sequence:
        if t <= 0:
            raise ValueError("t must be positive")
        R = barenblatt_front_radius(params, t)
        lo = [-R] * params.n
        hi = [R] * params.n
        out.append(integrate_midpoint(
            lambda x: barenblatt_eval(params, x, t) * phi(x), lo, hi, rel_tol=rel_tol))
    return np.array(out)


@dataclass(frozen=True)
class SeparableSolution:
    """Separable solution t^{-1/(p-2)} U(x) built on a discrete profile U
    (nonnegative, vanishing on the domain boundary)."""

    profile: ScalarField
    p: float

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError("requires p > 2")
        vals = self.profile.values
        if vals.min() < 0:
            raise ValueError("profile must be nonnegative")
        bmask = self.profile.grid.boundary_mask()
        if np.max(np.abs(vals[bmask])) > 1e-12 * max(1.0, vals.max()):
            raise ValueError("profile must vanish on the boundary")


def separable_eval(sep: SeparableSolution, node, t: float) -> float:
    """Value of the separable solution at a node index and time t > 0."""
    if t <= 0:
        raise ValueError("t must be positive")
    return t ** (-1.0 / (sep.p - 2.0)) * sep.profile[node]


def separable_field(sep: SeparableSolution, t: float) -> ScalarField:
    if t <= 0:
        raise ValueError("t must be positive")
    return sep.profile.with_values(t ** (-1.0 / (sep.p - 2.0)) * sep.profile.values)


def pde_residual(u_callable, x, t: float, p: float, eps: float = 0.0,
                 fd_steps=1e-3) -> float:
    """Finite-difference residual u_t - div((|grad u|^2 + eps^2)^{(p-2)/2} grad u)
    at a point, by nested central differences with steps ``fd_steps``
    (scalar, or a (dx, dt) pair).  Second-order accurate where u is smooth;
    keep clear of free boundaries.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if np.isscalar(fd_steps):
        dx = dt = float(fd_steps)
    else:
        dx, dt = (float(v) for v in fd_steps)
    if dt >= t:
        raise ValueError("time step must be smaller than t")

    x = np.atleast_1d(np.asarray(x, dtype=float))
    ndim = x.size

    def grad(y):
        g = np.zeros(ndim)
        for d in range(ndim):
            e = np.zeros(ndim)
            e[d] = dx
            g[d] = (u_callable(_squeeze(y + e), t) - u_callable(_squeeze(y - e), t)) / (2 * dx)
        return g

    def flux(y):
        g = grad(y)
        a = (np.dot(g, g) + eps * eps) ** ((p - 2.0) / 2.0)
        return a * g

    div = 0.0
    for d in range(ndim):
        e = np.zeros(ndim)
        e[d] = dx
        div += (flux(x + e)[d] - flux(x - e)[d]) / (2 * dx)

    u_t = (u_callable(_squeeze(x), t + dt) - u_callable(_squeeze(x), t - dt)) / (2 * dt)
    return float(u_t - div)


def _squeeze(y: np.ndarray):
    return float(y[0]) if y.size == 1 else y
