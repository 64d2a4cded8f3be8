"""Discretized curves on a uniform grid with stencil derivative reconstruction.

First and second derivatives use second-order central stencils at interior
nodes and second-order one-sided stencils at the endpoints, so polynomial
curves of degree <= 2 are reconstructed exactly at interior nodes.  The action
functional is composite Simpson quadrature over the grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .fields import ScalarField, EvaluationError
from .spaces import Space, ValidationError, seminorm


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [a, b] with N intervals."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not self.a < self.b:
            raise ValidationError(f"need a < b, got [{self.a}, {self.b}]")
        if self.n < 4:
            raise ValidationError(f"need N >= 4 intervals, got {self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n + 1)


@dataclass(frozen=True)
class Curve:
    """Node values of a curve [a, b] -> Space."""

    space: Space
    grid: Grid
    values: np.ndarray  # (N+1, dim)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n + 1, self.space.dim):
            raise ValidationError(
                f"curve values shape {vals.shape} != "
                f"({self.grid.n + 1}, {self.space.dim})"
            )
        if not np.all(np.isfinite(vals)):
            raise ValidationError("curve has non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def from_function(space: Space, grid: Grid, f: Callable) -> "Curve":
        vals = np.array([np.atleast_1d(np.asarray(f(t), dtype=float)) for t in grid.nodes])
        return Curve(space, grid, vals)


def stencil_derivative(values: np.ndarray, h: float, order: int) -> np.ndarray:
    """Nodewise derivative of a sampled sequence (works on vectors and matrices
    stacked along axis 0)."""
    v = np.asarray(values, dtype=float)
    d = np.empty_like(v)
    if order == 1:
        d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
        d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    elif order == 2:
        d[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
        d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
        d[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    else:
        raise ValidationError(f"derivative order must be 1 or 2, got {order}")
    return d


def first_derivative_stencil(grid: Grid, j: int) -> dict:
    """Stencil weights of the first-derivative reconstruction at node j, as a
    map node index -> coefficient.  Needed for exact Jacobian assembly."""
    h2 = 2.0 * grid.h
    if j == 0:
        return {0: -3.0 / h2, 1: 4.0 / h2, 2: -1.0 / h2}
    if j == grid.n:
        return {grid.n: 3.0 / h2, grid.n - 1: -4.0 / h2, grid.n - 2: 1.0 / h2}
    return {j - 1: -1.0 / h2, j + 1: 1.0 / h2}


def derivative(curve: Curve, i: int, order: int) -> np.ndarray:
    """Reconstructed derivative of the given order at node i."""
    if not 0 <= i <= curve.grid.n:
        raise ValidationError(f"node index {i} out of range 0..{curve.grid.n}")
    return stencil_derivative(curve.values, curve.grid.h, order)[i]


def derivative_all(curve: Curve, order: int) -> np.ndarray:
    return stencil_derivative(curve.values, curve.grid.h, order)


def curve_seminorm_c1(curve: Curve, p: int) -> float:
    """sup |x(t)|_p + sup |x'(t)|_p, with sups taken over the grid nodes."""
    xs = curve.values
    vs = derivative_all(curve, 1)
    sup_x = max(seminorm(curve.space, p, y) for y in xs)
    sup_v = max(seminorm(curve.space, p, y) for y in vs)
    return sup_x + sup_v


def curve_seminorm_c2(curve: Curve, p: int) -> float:
    """C1 seminorm plus the sup of the reconstructed second derivative."""
    acc = curve_seminorm_c1(curve, p)
    sup_a = max(seminorm(curve.space, p, y) for y in derivative_all(curve, 2))
    return acc + sup_a


@dataclass(frozen=True)
class ActionReport:
    value: float
    rule: str
    node_count: int


def action(L: ScalarField, curve: Curve) -> ActionReport:
    """Simpson quadrature of L(t, x, x') along the curve."""
    grid = curve.grid
    if grid.n % 2 != 0:
        raise ValidationError(f"Simpson quadrature needs an even N, got {grid.n}")
    vels = derivative_all(curve, 1)
    f = np.empty(grid.n + 1)
    for i, t in enumerate(grid.nodes):
        try:
            f[i] = L(t, curve.values[i], vels[i])
        except EvaluationError as err:
            raise EvaluationError(f"integrand failed at node {i} (t={t}): {err}")
    return ActionReport(
        value=float(simpson(f, dx=grid.h)), rule="simpson", node_count=grid.n + 1
    )


# -- CSV interchange ----------------------------------------------------


def write_curve_csv(curve: Curve, path, velocities: bool = False) -> None:
    dim = curve.space.dim
    header = ["t"] + [f"x{i}" for i in range(1, dim + 1)]
    if velocities:
        header += [f"v{i}" for i in range(1, dim + 1)]
        vels = derivative_all(curve, 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, t in enumerate(curve.grid.nodes):
            row = [repr(float(t))] + [repr(float(y)) for y in curve.values[i]]
            if velocities:
                row += [repr(float(y)) for y in vels[i]]
            writer.writerow(row)


def read_curve_csv(space: Space, path) -> Curve:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = [name for name in header if name.startswith("x")]
        if len(cols) != space.dim:
            raise ValidationError(
                f"CSV has {len(cols)} coordinate columns, space has dim {space.dim}"
            )
        ts, rows = [], []
        for row in reader:
            ts.append(float(row[0]))
            rows.append([float(z) for z in row[1 : space.dim + 1]])
    ts = np.asarray(ts)
    n = len(ts) - 1
    grid = Grid(a=float(ts[0]), b=float(ts[-1]), n=n)
    if not np.allclose(ts, grid.nodes, rtol=0, atol=1e-9 * (1 + abs(grid.b))):
        raise ValidationError("CSV nodes are not a uniform grid")
    return Curve(space, grid, np.asarray(rows))
