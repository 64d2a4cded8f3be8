"""First variation, pointwise Euler-Lagrange residual, and a Newton
collocation solver for two-point boundary value extremals.

The residual at interior node i is dL/dx(t_i, x_i, x'_i) minus the stencil
time derivative of the momentum covector dL/dv along the curve; the solver
drives the stacked interior residual to zero with a damped Newton iteration
whose Jacobian is assembled exactly from the second-partial blocks of L.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .curves import Curve, Grid, derivative_all, first_derivative_stencil
from .fields import ScalarField
from .spaces import Space, ValidationError, dual_seminorm


@dataclass(frozen=True)
class BoundaryConditions:
    xa: np.ndarray
    xb: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xa", np.atleast_1d(np.asarray(self.xa, dtype=float)))
        object.__setattr__(self, "xb", np.atleast_1d(np.asarray(self.xb, dtype=float)))
        if not (np.all(np.isfinite(self.xa)) and np.all(np.isfinite(self.xb))):
            raise ValidationError("boundary values must be finite")


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0
    seed_curve: Optional[Curve] = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("solver tolerance must be positive")
        if self.max_iter < 1:
            raise ValidationError("need at least one Newton iteration")


class SolverError(RuntimeError):
    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


def first_variation(L: ScalarField, x: Curve, h: Curve) -> float:
    """Simpson quadrature of dL/dx . h + dL/dv . h' along the curve."""
    if x.grid != h.grid or x.space.dim != h.space.dim:
        raise ValidationError("curve and variation must share grid and space")
    grid = x.grid
    xd = derivative_all(x, 1)
    hd = derivative_all(h, 1)
    f = np.empty(grid.n + 1)
    for i, t in enumerate(grid.nodes):
        lx = L.partial("x", t, x.values[i], xd[i])
        lv = L.partial("v", t, x.values[i], xd[i])
        f[i] = lx @ h.values[i] + lv @ hd[i]
    return float(simpson(f, dx=grid.h))


@dataclass(frozen=True)
class ELResidual:
    """Per-interior-node residual covectors and their dual-seminorm summary."""

    nodes: np.ndarray  # interior node times
    residuals: np.ndarray  # (N-1, dim)
    max_norm: float
    dual_index: int


def _momentum_track(L: ScalarField, x: Curve) -> np.ndarray:
    xd = derivative_all(x, 1)
    return np.array(
        [
            L.partial("v", t, x.values[i], xd[i])
            for i, t in enumerate(x.grid.nodes)
        ]
    )


def el_residual(L: ScalarField, x: Curve, dual_index: Optional[int] = None) -> ELResidual:
    """Pointwise Euler-Lagrange residual dL/dx - d/dt dL/dv at interior nodes.

    The time derivative of the momentum uses the same central stencils as the
    curve derivative reconstruction; the summary norm is the max over nodes of
    the dual seminorm at ``dual_index`` (default: the strongest index).
    """
    grid = x.grid
    if dual_index is None:
        dual_index = x.space.num_seminorms
    xd = derivative_all(x, 1)
    p = _momentum_track(L, x)
    dp = (p[2:] - p[:-2]) / (2.0 * grid.h)
    res = np.empty((grid.n - 1, x.space.dim))
    for k, i in enumerate(range(1, grid.n)):
        lx = L.partial("x", grid.nodes[i], x.values[i], xd[i])
        res[k] = lx - dp[k]
    norms = [dual_seminorm(x.space, dual_index, r) for r in res]
    return ELResidual(
        nodes=grid.nodes[1:-1],
        residuals=res,
        max_norm=float(max(norms)),
        dual_index=dual_index,
    )


def _interior_residual(L, grid, space, xs):
    """Stacked residual over interior nodes for the full node array xs."""
    n, m = grid.n, space.dim
    xd = np.empty((n + 1, m))
    for j in range(n + 1):
        st = first_derivative_stencil(grid, j)
        xd[j] = sum(c * xs[k] for k, c in st.items())
    p = np.array(
        [L.partial("v", grid.nodes[j], xs[j], xd[j]) for j in range(n + 1)]
    )
    out = np.empty((n - 1, m))
    for k, i in enumerate(range(1, n)):
        lx = L.partial("x", grid.nodes[i], xs[i], xd[i])
        out[k] = lx - (p[i + 1] - p[i - 1]) / (2.0 * grid.h)
    return out, xd


def _interior_jacobian(L, grid, space, xs, xd):
    """Exact Jacobian of the stacked residual with respect to interior nodes."""
    n, m = grid.n, space.dim
    lxx = np.empty((n + 1, m, m))
    lxv = np.empty((n + 1, m, m))
    lvv = np.empty((n + 1, m, m))
    for j in range(n + 1):
        t = grid.nodes[j]
        lxx[j] = L.second_partial("xx", t, xs[j], xd[j])
        lxv[j] = L.second_partial("xv", t, xs[j], xd[j])
        lvv[j] = L.second_partial("vv", t, xs[j], xd[j])
    jac = np.zeros((n - 1, m, n - 1, m))

    def add(i, k, block):
        if 1 <= k <= n - 1:
            jac[i - 1, :, k - 1, :] += block

    for i in range(1, n):
        add(i, i, lxx[i])
        for k, c in first_derivative_stencil(grid, i).items():
            add(i, k, c * lxv[i])
        # - d/dt momentum term: central stencil over nodes i-1, i+1
        for j, d in ((i + 1, 1.0 / (2.0 * grid.h)), (i - 1, -1.0 / (2.0 * grid.h))):
            add(i, j, -d * lxv[j].T)  # dp_j/dx_j = (d2L/dv dx)_j
            for k, c in first_derivative_stencil(grid, j).items():
                add(i, k, -d * c * lvv[j])
    return jac.reshape((n - 1) * m, (n - 1) * m)


def solve_extremal(
    L: ScalarField,
    bc: BoundaryConditions,
    grid: Grid,
    space: Space,
    cfg: SolverConfig = SolverConfig(),
) -> Curve:
    """Damped Newton iteration on the discretized Euler-Lagrange system."""
    if grid.n % 2 != 0:
        raise ValidationError(f"grid N must be even, got {grid.n}")
    m = space.dim
    if bc.xa.shape != (m,) or bc.xb.shape != (m,):
        raise ValidationError("boundary values do not match the space dimension")

    if cfg.seed_curve is not None:
        xs = cfg.seed_curve.values.copy()
        if xs.shape != (grid.n + 1, m):
            raise ValidationError("seed curve does not match the grid")
    else:
        frac = np.linspace(0.0, 1.0, grid.n + 1)[:, None]
        xs = bc.xa[None, :] * (1.0 - frac) + bc.xb[None, :] * frac
    xs[0] = bc.xa
    xs[-1] = bc.xb

    history = []
    for _ in range(cfg.max_iter):
        res, xd = _interior_residual(L, grid, space, xs)
        norm = float(np.max(np.abs(res)))
        history.append(norm)
        if norm <= cfg.tol:
            return Curve(space, grid, xs)
        jac = _interior_jacobian(L, grid, space, xs, xd)
        try:
            step = np.linalg.solve(jac, -res.reshape(-1))
        except np.linalg.LinAlgError:
            worst = int(np.argmax(np.max(np.abs(res), axis=1))) + 1
            raise SolverError(
                f"singular Newton Jacobian near node {worst} "
                f"(t={grid.nodes[worst]:.6g}); the velocity Hessian of the "
                "Lagrangian may fail the Legendre condition there",
                history,
            )
        step = step.reshape(grid.n - 1, m)
        # backtracking on the residual max-norm
        lam = cfg.damping
        for _ in range(30):
            trial = xs.copy()
            trial[1:-1] += lam * step
            trial_res, _ = _interior_residual(L, grid, space, trial)
            if float(np.max(np.abs(trial_res))) < norm:
                xs = trial
                break
            lam *= 0.5
        else:
            raise SolverError(
                f"line search stalled at residual {norm:.3e}", history
            )
    res, _ = _interior_residual(L, grid, space, xs)
    norm = float(np.max(np.abs(res)))
    if norm <= cfg.tol:
        return Curve(space, grid, xs)
    raise SolverError(
        f"Newton did not converge in {cfg.max_iter} iterations "
        f"(residual {norm:.3e}); history {['%.3e' % r for r in history]}",
        history,
    )
