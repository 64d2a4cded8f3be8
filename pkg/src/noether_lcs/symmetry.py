"""Lie point symmetry generators, the infinitesimal invariance test, and
construction/verification of Noether first integrals.

A generator is a pair (T, X): a scalar field and a vector field of (t, x).
Invariance of the variational problem is checked through the residual

    dL/dt T + dL/dx . X + dL/dv . (X' - v T') + L T'

with primes the total time derivatives along the curve; a vanishing residual
is equivalent to invariance and yields the conserved quantity

    C = [L - dL/dv . v] T + dL/dv . X.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .curves import Curve, derivative_all
from .fields import ScalarField
from .spaces import ValidationError


@dataclass(frozen=True)
class SymmetryGenerator:
    """Pair (T, X) of a scalar and a vector field of (t, x)."""

    dim: int
    T: ScalarField
    X: tuple  # dim ScalarFields, one per component
    name: str = ""

    def __post_init__(self):
        if len(self.X) != self.dim:
            raise ValidationError(
                f"generator has {len(self.X)} X components for dim {self.dim}"
            )

    def T_value(self, t, x) -> float:
        return self.T(t, x, np.zeros(self.dim))

    def X_value(self, t, x) -> np.ndarray:
        z = np.zeros(self.dim)
        return np.array([c(t, x, z) for c in self.X])

    def scaled(self, factor: float) -> "SymmetryGenerator":
        return SymmetryGenerator(
            dim=self.dim,
            T=_scale_field(self.T, factor),
            X=tuple(_scale_field(c, factor) for c in self.X),
            name=self.name,
        )


def _scale_field(f: ScalarField, c: float) -> ScalarField:
    return ScalarField(
        dim=f.dim,
        func=lambda t, x, v: c * f.func(t, x, v),
        uses=f.uses,
        d_t=None if f.d_t is None else (lambda t, x, v: c * f.d_t(t, x, v)),
        d_x=None if f.d_x is None else (lambda t, x, v: c * np.asarray(f.d_x(t, x, v))),
        d_v=None if f.d_v is None else (lambda t, x, v: c * np.asarray(f.d_v(t, x, v))),
        fd=f.fd,
    )


def affine_generator(
    dim: int, t_coeffs: Sequence[float], x_coeffs, name: str = ""
) -> SymmetryGenerator:
    """Generator with affine components.

    ``t_coeffs`` = (a0, a1, b1..bm) gives T = a0 + a1 t + sum b_i x_i;
    ``x_coeffs`` is a (dim, dim+2) array with the same layout per component.
    """
    t_coeffs = np.asarray(t_coeffs, dtype=float)
    x_coeffs = np.asarray(x_coeffs, dtype=float).reshape(dim, dim + 2)
    if t_coeffs.shape != (dim + 2,):
        raise ValidationError(f"T coefficient vector must have length {dim + 2}")

    def make(coeffs):
        a0, a1 = coeffs[0], coeffs[1]
        b = coeffs[2:].copy()
        return ScalarField(
            dim=dim,
            func=lambda t, x, v: a0 + a1 * t + float(b @ x),
            uses=frozenset({"t", "x"}),
            d_t=lambda t, x, v: a1,
            d_x=lambda t, x, v: b,
            d_v=lambda t, x, v: np.zeros(dim),
        )

    return SymmetryGenerator(
        dim=dim,
        T=make(t_coeffs),
        X=tuple(make(row) for row in x_coeffs),
        name=name,
    )


def catalog_generator(name: str, dim: int) -> SymmetryGenerator:
    """Named generators: time-translation, space-translation[-j],
    rotation-ij, dilation, galilean[-j]."""
    zero_t = np.zeros(dim + 2)
    zero_x = np.zeros((dim, dim + 2))
    if name == "time-translation":
        t = zero_t.copy()
        t[0] = 1.0
        return affine_generator(dim, t, zero_x, name=name)
    if name == "dilation":
        t = zero_t.copy()
        t[1] = 1.0
        return affine_generator(dim, t, zero_x, name=name)
    if name.startswith("space-translation"):
        axis = int(name.rsplit("-", 1)[1]) if name[len("space-translation"):] else 1
        if not 1 <= axis <= dim:
            raise ValidationError(f"translation axis {axis} out of range for dim {dim}")
        x = zero_x.copy()
        x[axis - 1, 0] = 1.0
        return affine_generator(dim, zero_t, x, name=name)
    if name.startswith("galilean"):
        axis = int(name.rsplit("-", 1)[1]) if name[len("galilean"):] else 1
        if not 1 <= axis <= dim:
            raise ValidationError(f"boost axis {axis} out of range for dim {dim}")
        x = zero_x.copy()
        x[axis - 1, 1] = 1.0  # X_axis = t
        return affine_generator(dim, zero_t, x, name=name)
    if name.startswith("rotation-"):
        digits = name[len("rotation-"):]
        if len(digits) != 2 or not digits.isdigit():
            raise ValidationError(f"rotation name must look like rotation-12, got {name}")
        i, j = int(digits[0]), int(digits[1])
        if not (1 <= i <= dim and 1 <= j <= dim and i != j):
            raise ValidationError(f"rotation axes {i},{j} invalid for dim {dim}")
        x = zero_x.copy()
        x[i - 1, 2 + (j - 1)] = -1.0  # X_i = -x_j
        x[j - 1, 2 + (i - 1)] = 1.0  # X_j = x_i
        return affine_generator(dim, zero_t, x, name=name)
    raise ValidationError(f"unknown catalog generator {name!r}")


# -- generator calculus -------------------------------------------------


def total_time_derivative(f: ScalarField, t, x, v) -> float:
    """f' = df/dt + df/dx . v for a field of (t, x)."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(f.partial("t", t, x, v)) + float(f.partial("x", t, x, v) @ v)


def extended_generator(g: SymmetryGenerator, t, x, v) -> np.ndarray:
    """Velocity-space generator V = X' - v T'."""
    v = np.asarray(v, dtype=float)
    tp = total_time_derivative(g.T, t, x, v)
    xp = np.array([total_time_derivative(c, t, x, v) for c in g.X])
    return xp - v * tp


def invariance_residual(L: ScalarField, g: SymmetryGenerator, t, x, v) -> float:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    lt = L.partial("t", t, x, v)
    lx = L.partial("x", t, x, v)
    lv = L.partial("v", t, x, v)
    tp = total_time_derivative(g.T, t, x, v)
    vv = extended_generator(g, t, x, v)
    return float(
        lt * g.T_value(t, x) + lx @ g.X_value(t, x) + lv @ vv + L(t, x, v) * tp
    )


@dataclass(frozen=True)
class SamplingConfig:
    """Quasi-random sampling box for (t, x, v) triples."""

    t_range: tuple = (0.0, 1.0)
    x_radius: float = 2.0
    v_radius: float = 2.0
    count: int = 200
    seed: int = 0

    def samples(self, dim: int):
        sampler = qmc.Halton(d=1 + 2 * dim, seed=self.seed)
        u = sampler.random(self.count)
        a, b = self.t_range
        ts = a + (b - a) * u[:, 0]
        xs = self.x_radius * (2.0 * u[:, 1 : dim + 1] - 1.0)
        vs = self.v_radius * (2.0 * u[:, dim + 1 :] - 1.0)
        return ts, xs, vs


@dataclass(frozen=True)
class InvarianceReport:
    residuals: np.ndarray
    max_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol


def check_invariance(
    L: ScalarField,
    g: SymmetryGenerator,
    samples: SamplingConfig = SamplingConfig(),
    tol: float = 1e-8,
) -> InvarianceReport:
    ts, xs, vs = samples.samples(g.dim)
    res = np.array(
        [invariance_residual(L, g, t, x, v) for t, x, v in zip(ts, xs, vs)]
    )
    return InvarianceReport(
        residuals=res, max_residual=float(np.max(np.abs(res))), tol=tol
    )


# -- first integrals ----------------------------------------------------


@dataclass(frozen=True)
class FirstIntegral:
    """Scalar quantity C(t, x, v) with a conservation-verification contract."""

    dim: int
    evaluator: Callable
    provenance: str = "user"  # 'noether' | 'user'

    def __call__(self, t, x, v) -> float:
        return float(self.evaluator(t, np.asarray(x, float), np.asarray(v, float)))


def noether_first_integral(L: ScalarField, g: SymmetryGenerator) -> FirstIntegral:
    """C = [L - dL/dv . v] T + dL/dv . X."""

    def evaluator(t, x, v):
        lv = L.partial("v", t, x, v)
        return (L(t, x, v) - float(lv @ v)) * g.T_value(t, x) + float(
            lv @ g.X_value(t, x)
        )

    return FirstIntegral(dim=g.dim, evaluator=evaluator, provenance="noether")


def hamiltonian(L: ScalarField, t, x, v) -> float:
    """H = -L + v . dL/dv."""
    v = np.asarray(v, dtype=float)
    return float(-L(t, x, v) + v @ L.partial("v", t, x, v))


@dataclass(frozen=True)
class ConservationReport:
    values: np.ndarray
    mean: float
    max_deviation: float
    relative_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.relative_deviation <= self.tol


def verify_conservation(C: FirstIntegral, x: Curve, tol: float) -> ConservationReport:
    """Evaluate C along the curve with reconstructed velocities and measure
    the spread around the mean."""
    xd = derivative_all(x, 1)
    vals = np.array(
        [C(t, x.values[i], xd[i]) for i, t in enumerate(x.grid.nodes)]
    )
    mean = float(np.mean(vals))
    max_dev = float(np.max(np.abs(vals - mean)))
    rel = max_dev / (1.0 + abs(mean))
    return ConservationReport(
        values=vals, mean=mean, max_deviation=max_dev, relative_deviation=rel, tol=tol
    )


# -- affine symmetry search ---------------------------------------------


def find_affine_symmetries(
    L: ScalarField,
    samples: SamplingConfig = SamplingConfig(),
    null_threshold: float = 1e-8,
    verify_tol: float = 1e-6,
    verify_count: int = 500,
) -> List[SymmetryGenerator]:
    """Null-space search over the affine generator ansatz
    T = a0 + a1 t + sum b_i x_i, X_j likewise.

    The invariance residual is linear in the generator, so symmetries are the
    null space of the residual matrix sampled at quasi-random points.  Each
    candidate is re-verified on a fresh sample set before being returned.
    """
    dim = L.dim
    per = dim + 2
    n_params = per * (dim + 1)
    count = max(samples.count, 3 * n_params)
    cfg = SamplingConfig(
        t_range=samples.t_range,
        x_radius=samples.x_radius,
        v_radius=samples.v_radius,
        count=count,
        seed=samples.seed,
    )
    basis = []
    for k in range(n_params):
        coeffs = np.zeros(n_params)
        coeffs[k] = 1.0
        basis.append(
            affine_generator(dim, coeffs[:per], coeffs[per:].reshape(dim, per))
        )
    ts, xs, vs = cfg.samples(dim)
    M = np.empty((count, n_params))
    for s in range(count):
        for k, g in enumerate(basis):
            M[s, k] = invariance_residual(L, g, ts[s], xs[s], vs[s])
    _, sing, vt = np.linalg.svd(M, full_matrices=True)
    cutoff = null_threshold * (sing[0] if len(sing) and sing[0] > 0 else 1.0)
    null_vectors = [
        vt[i]
        for i in range(n_params)
        if i >= len(sing) or sing[i] <= cutoff
    ]
    fresh = SamplingConfig(
        t_range=samples.t_range,
        x_radius=samples.x_radius,
        v_radius=samples.v_radius,
        count=verify_count,
        seed=samples.seed + 1,
    )
    out = []
    for vec in null_vectors:
        vec = vec / np.max(np.abs(vec))
        g = affine_generator(dim, vec[:per], vec[per:].reshape(dim, per))
        if check_invariance(L, g, fresh, tol=verify_tol).passed:
            object.__setattr__(g, "coefficients", vec.copy())
            out.append(g)
    return out
