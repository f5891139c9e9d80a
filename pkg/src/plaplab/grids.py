"""Uniform box grids, nodal scalar fields, and space-time domains.

Everything downstream (time steppers, elliptic solves, experiments) works on
nodal values over an axis-aligned box in 1 or 2 space dimensions with uniform
spacing per axis.  Node coordinates are always reconstructed as
``lo + index * h`` so that index <-> coordinate round trips are exact.

Grids and fields are immutable after construction; solver steps return fresh
fields instead of mutating in place, which makes them safe to share across
concurrent runs.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "MediumParams",
    "SlantedDomain",
    "HalfBallPartition",
    "build_grid",
    "build_slanted_domain",
    "partition_half_ball",
    "field_mass",
    "norm_l1",
    "norm_linf",
    "field_to_csv",
    "field_to_json",
    "field_from_json",
]


def _as_tuple(value, n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        out = (float(value),) * n
    else:
        out = tuple(float(v) for v in value)
    if len(out) != n:
        raise ValueError(f"{name} must have {n} entries, got {len(out)}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform rectilinear grid of nodes over an axis-aligned box.

    ``cells`` counts nodes per axis (boundary nodes included), so the spacing
    is ``h = (hi - lo) / (cells - 1)``.
    """

    n: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    cells: tuple[int, ...]
    h: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if len(self.lo) != self.n or len(self.hi) != self.n or len(self.cells) != self.n:
            raise ValueError("lo/hi/cells must all have length n")
        for d in range(self.n):
            if self.cells[d] < 3:
                raise ValueError(f"need at least 3 nodes per axis, got {self.cells[d]} on axis {d}")
            if not self.hi[d] > self.lo[d]:
                raise ValueError(f"degenerate box: lo={self.lo[d]} hi={self.hi[d]} on axis {d}")
        h = tuple((self.hi[d] - self.lo[d]) / (self.cells[d] - 1) for d in range(self.n))
        object.__setattr__(self, "h", h)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.cells))

    def axes(self) -> list[np.ndarray]:
        """1D coordinate array per axis, as lo + index*h exactly."""
        return [self.lo[d] + self.h[d] * np.arange(self.cells[d]) for d in range(self.n)]

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))

    def node_coord(self, index) -> tuple[float, ...]:
        idx = (index,) if np.isscalar(index) else tuple(index)
        if len(idx) != self.n:
            raise ValueError(f"index must have {self.n} entries")
        for d, i in enumerate(idx):
            if not 0 <= i < self.cells[d]:
                raise IndexError(f"node index {i} out of range on axis {d}")
        return tuple(self.lo[d] + idx[d] * self.h[d] for d in range(self.n))

    def nearest_node(self, x) -> tuple[int, ...]:
        pt = _as_tuple(x, self.n, "x")
        idx = []
        for d in range(self.n):
            i = int(round((pt[d] - self.lo[d]) / self.h[d]))
            idx.append(min(max(i, 0), self.cells[d] - 1))
        return tuple(idx)

    def contains(self, x) -> bool:
        pt = _as_tuple(x, self.n, "x")
        return all(self.lo[d] <= pt[d] <= self.hi[d] for d in range(self.n))

    def boundary_mask(self) -> np.ndarray:
        """Boolean array over nodes, True on the box boundary."""
        mask = np.zeros(self.shape, dtype=bool)
        for d in range(self.n):
            sl_lo = [slice(None)] * self.n
            sl_hi = [slice(None)] * self.n
            sl_lo[d] = 0
            sl_hi[d] = -1
            mask[tuple(sl_lo)] = True
            mask[tuple(sl_hi)] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask()

    def volume_weights(self) -> np.ndarray:
        """Tensor-trapezoid node volumes: h per axis inside, h/2 at the rim.

        These are the weights under which the conservative face-flux scheme
        conserves mass exactly with zero-flux boundaries.
        """
        w = np.ones(self.shape)
        for d in range(self.n):
            wd = np.full(self.cells[d], self.h[d])
            wd[0] *= 0.5
            wd[-1] *= 0.5
            shape = [1] * self.n
            shape[d] = self.cells[d]
            w = w * wd.reshape(shape)
        return w


def build_grid(n: int, lo, hi, cells) -> Grid:
    """Uniform grid over the box [lo, hi] with ``cells`` nodes per axis."""
    lo_t = _as_tuple(lo, n, "lo")
    hi_t = _as_tuple(hi, n, "hi")
    if np.isscalar(cells):
        cells_t = (int(cells),) * n
    else:
        cells_t = tuple(int(c) for c in cells)
    return Grid(n=n, lo=lo_t, hi=hi_t, cells=cells_t)


@dataclass(frozen=True)
class ScalarField:
    """One real value per grid node.  Values are finite by construction;
    "infinite" data exists only as a ladder of finite truncation constants."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != self.grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)

    @staticmethod
    def constant(grid: Grid, value: float) -> "ScalarField":
        return ScalarField(grid, np.full(grid.shape, float(value)))

    @staticmethod
    def from_function(grid: Grid, fn) -> "ScalarField":
        mesh = grid.meshgrid()
        if grid.n == 1:
            vals = np.asarray(fn(mesh[0]), dtype=float)
        else:
            vals = np.asarray(fn(*mesh), dtype=float)
        return ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())

    def __getitem__(self, index) -> float:
        idx = (index,) if np.isscalar(index) else tuple(index)
        return float(self.values[idx])


@dataclass(frozen=True)
class MediumParams:
    """Medium exponent and regularization.

    The slow-diffusion regime p > 2 is enforced here; the elliptic module
    separately admits bare exponents down to p > 1 for its linear cross-check.
    """

    p: float
    eps: float = 0.0
    n: int = 1

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError(f"requires p > 2 (slow diffusion); got p = {self.p}")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")


@dataclass(frozen=True)
class SlantedDomain:
    """Space-time domain whose lower surface is the affine graph
    t = t0 + a . x; ``activation`` holds that time per node.

    A zero slope reproduces the plain cylinder (activation identically t0,
    bit-exact), which is the control case of the slanted experiments.
    """

    grid: Grid
    t0: float
    a: tuple[float, ...]
    T: float
    activation: np.ndarray = field(init=False)

    def __post_init__(self):
        a = _as_tuple(self.a, self.grid.n, "a")
        object.__setattr__(self, "a", a)
        act = np.full(self.grid.shape, float(self.t0))
        mesh = self.grid.meshgrid()
        for d in range(self.grid.n):
            act = act + a[d] * mesh[d]
        if not act.max() < self.T:
            raise ValueError(f"activation surface must stay below T={self.T}, max is {act.max()}")
        act.setflags(write=False)
        object.__setattr__(self, "activation", act)

    @property
    def max_activation(self) -> float:
        return float(self.activation.max())


def build_slanted_domain(grid: Grid, t0: float, a, T: float) -> SlantedDomain:
    return SlantedDomain(grid=grid, t0=float(t0), a=_as_tuple(a, grid.n, "a"), T=float(T))


@dataclass(frozen=True)
class HalfBallPartition:
    """Discrete ball around ``x0`` split by the level plane of an affine map
    with gradient ``normal`` into a lower half (minus), an upper half (plus)
    and the interface strip within half a cell of the plane.

    ``shell`` marks the subset of minus-nodes whose stencil touches the ball
    exterior; those carry the outer Dirichlet data of the barrier problem,
    while ``unknowns`` = minus minus shell are solved for.
    """

    grid: Grid
    x0: tuple[float, ...]
    r: float
    normal: tuple[float, ...]
    minus: np.ndarray     # boolean masks over grid.shape
    plus: np.ndarray
    interface: np.ndarray
    shell: np.ndarray

    def __post_init__(self):
        for name in ("minus", "plus", "interface", "shell"):
            m = getattr(self, name)
            m = np.asarray(m, dtype=bool)
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        if np.any(self.minus & self.plus) or np.any(self.minus & self.interface) or np.any(self.plus & self.interface):
            raise ValueError("minus/plus/interface must be disjoint")
        if not self.minus.any():
            raise ValueError("empty lower half: no nodes below the level plane inside the ball")
        if not self.interface.any():
            raise ValueError("interface has no nodes")
        if np.any(self.shell & ~self.minus):
            raise ValueError("shell must be a subset of minus")

    @property
    def unknowns(self) -> np.ndarray:
        return self.minus & ~self.shell


def partition_half_ball(grid: Grid, x0, r: float, normal) -> HalfBallPartition:
    """Split the discrete ball {|x - x0| <= r} by the plane normal . (x - x0) = 0.

    The ball must sit strictly inside the grid box (no boundary nodes); the
    interface is the set of ball nodes within half a cell of the plane,
    measured along the normal.
    """
    x0_t = _as_tuple(x0, grid.n, "x0")
    nrm = _as_tuple(normal, grid.n, "normal")
    if r <= 0:
        raise ValueError("radius must be positive")
    if math.sqrt(sum(v * v for v in nrm)) == 0.0:
        raise ValueError("flat level function: normal must be nonzero")
    for d in range(grid.n):
        if not (grid.lo[d] < x0_t[d] - r and x0_t[d] + r < grid.hi[d]):
            raise ValueError("ball touches the domain boundary")

    mesh = grid.meshgrid()
    dist_sq = np.zeros(grid.shape)
    s = np.zeros(grid.shape)
    for d in range(grid.n):
        delta = mesh[d] - x0_t[d]
        dist_sq = dist_sq + delta * delta
        s = s + nrm[d] * delta
    in_ball = dist_sq <= r * r * (1 + 1e-12)
    if np.any(in_ball & grid.boundary_mask()):
        raise ValueError("ball touches the domain boundary")

    half = 0.5 * sum(abs(nrm[d]) * grid.h[d] for d in range(grid.n))
    interface = in_ball & (np.abs(s) <= half)
    minus = in_ball & (s < -half)
    plus = in_ball & (s > half)
    if not minus.any():
        raise ValueError("empty lower half: no nodes below the level plane inside the ball")

    # shell: minus-nodes with a stencil neighbor outside the ball
    shell = np.zeros(grid.shape, dtype=bool)
    for d in range(grid.n):
        out = ~in_ball
        lo_sl = [slice(None)] * grid.n
        hi_sl = [slice(None)] * grid.n
        lo_sl[d] = slice(None, -1)
        hi_sl[d] = slice(1, None)
        nb_out = np.zeros(grid.shape, dtype=bool)
        nb_out[tuple(lo_sl)] |= out[tuple(hi_sl)]
        nb_out[tuple(hi_sl)] |= out[tuple(lo_sl)]
        shell |= minus & nb_out
    return HalfBallPartition(grid=grid, x0=x0_t, r=float(r), normal=nrm,
                             minus=minus, plus=plus, interface=interface, shell=shell)


def field_mass(f: ScalarField) -> float:
    """Discrete integral of the field under tensor-trapezoid weights."""
    return float(np.sum(f.values * f.grid.volume_weights()))


def norm_l1(f: ScalarField) -> float:
    return float(np.sum(np.abs(f.values) * f.grid.volume_weights()))


def norm_linf(f: ScalarField) -> float:
    return float(np.max(np.abs(f.values)))


def field_to_csv(f: ScalarField, path) -> None:
    """Node coordinates plus value column; one row per node in C order."""
    headers = ["x", "value"] if f.grid.n == 1 else ["x", "y", "value"]
    mesh = [m.ravel() for m in f.grid.meshgrid()]
    vals = f.values.ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for i in range(f.grid.num_nodes):
            writer.writerow([f"{m[i]:.17g}" for m in mesh] + [f"{vals[i]:.17g}"])


def field_to_json(f: ScalarField, path=None) -> str:
    """Metadata header plus flat value array (C order); optionally written out."""
    doc = {
        "grid": {
            "n": f.grid.n,
            "lo": list(f.grid.lo),
            "hi": list(f.grid.hi),
            "cells": list(f.grid.cells),
            "h": list(f.grid.h),
        },
        "values": f.values.ravel().tolist(),
    }
    text = json.dumps(doc, sort_keys=True)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def field_from_json(source) -> ScalarField:
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        doc = json.loads(source)
    g = doc["grid"]
    grid = build_grid(int(g["n"]), g["lo"], g["hi"], g["cells"])
    values = np.array(doc["values"], dtype=float).reshape(grid.shape)
    return ScalarField(grid, values)
