import numpy as np
import pytest

import noether_lcs as nl


def names(gens):
    return {g.name for g in gens}


def test_catalog_generator_values():
    g = nl.catalog_generator("time-translation", 2)
    assert g.T_value(0.3, [1.0, 2.0]) == 1.0
    assert g.X_value(0.3, [1.0, 2.0]) == pytest.approx([0.0, 0.0])

    g = nl.catalog_generator("space-translation-2", 2)
    assert g.T_value(0.3, [1.0, 2.0]) == 0.0
    assert g.X_value(0.3, [1.0, 2.0]) == pytest.approx([0.0, 1.0])

    g = nl.catalog_generator("dilation", 1)
    assert g.T_value(0.5, [3.0]) == 0.5

    g = nl.catalog_generator("galilean-1", 1)
    assert g.X_value(0.7, [9.0]) == pytest.approx([0.7])

    g = nl.catalog_generator("rotation-12", 2)
    assert g.X_value(0.0, [1.0, 2.0]) == pytest.approx([-2.0, 1.0])


def test_catalog_generator_validation():
    with pytest.raises(nl.ValidationError):
        nl.catalog_generator("galilean-3", 2)
    with pytest.raises(nl.ValidationError):
        nl.catalog_generator("rotation-11", 2)
    with pytest.raises(nl.ValidationError):
        nl.catalog_generator("frobnicate", 1)


def test_generator_dimension_mismatch():
    T = nl.catalog_generator("time-translation", 2).T
    with pytest.raises(nl.ValidationError):
        nl.SymmetryGenerator(dim=2, T=T, X=(T,))


def test_total_time_derivative_affine():
    g = nl.affine_generator(1, [0.0, 1.0, 2.0], np.zeros((1, 3)))
    # T = t + 2 x1, so T' = 1 + 2 v1
    assert nl.total_time_derivative(g.T, 0.5, [1.0], [3.0]) == pytest.approx(7.0)


def test_extended_generator_boost():
    g = nl.catalog_generator("galilean-1", 1)
    # X = t, T = 0: velocity-space component X' - v T' = 1
    assert nl.extended_generator(g, 0.4, [2.0], [5.0]) == pytest.approx([1.0])


def test_invariance_free_particle_translation(free_particle):
    g = nl.catalog_generator("space-translation-1", 1)
    rep = nl.check_invariance(free_particle, g)
    assert rep.passed
    assert rep.max_residual <= 1e-12


def test_invariance_free_particle_time_translation(free_particle):
    g = nl.catalog_generator("time-translation", 1)
    assert nl.check_invariance(free_particle, g).passed


def test_invariance_free_particle_boost_fails(free_particle):
    # a pure boost changes the kinetic action by a boundary term, so the
    # strict invariance residual equals v1 and cannot vanish
    g = nl.catalog_generator("galilean-1", 1)
    rep = nl.check_invariance(free_particle, g)
    assert not rep.passed
    v_sup = nl.SamplingConfig().v_radius
    assert rep.max_residual <= v_sup + 1e-12
    assert rep.max_residual >= 1.5


def test_invariance_oscillator_time_translation(oscillator):
    assert nl.check_invariance(
        oscillator, nl.catalog_generator("time-translation", 1)
    ).passed


def test_invariance_oscillator_translation_fails(oscillator):
    rep = nl.check_invariance(
        oscillator, nl.catalog_generator("space-translation-1", 1)
    )
    assert not rep.passed


def test_invariance_rotation_central_potential():
    L = nl.compile_field("(v1^2 + v2^2)/2 - (x1^2 + x2^2)/2", dim=2)
    assert nl.check_invariance(L, nl.catalog_generator("rotation-12", 2)).passed


def test_invariance_dilation_kepler_style():
    # L = v^2/2 + 1/(2 x^2) is invariant under T = t, X = x/2
    L = nl.compile_field("v1^2/2 + 1/(2*x1^2)", dim=1)
    g = nl.affine_generator(1, [0.0, 1.0, 0.0], [[0.0, 0.0, 0.5]])
    rep = nl.check_invariance(
        L, g, nl.SamplingConfig(t_range=(0.1, 1.0), x_radius=2.0)
    )
    assert rep.passed


def test_invariance_residual_linear_in_generator(free_particle):
    g = nl.catalog_generator("galilean-1", 1)
    r1 = nl.invariance_residual(free_particle, g, 0.3, [1.0], [2.0])
    r2 = nl.invariance_residual(free_particle, g.scaled(3.0), 0.3, [1.0], [2.0])
    assert r2 == pytest.approx(3.0 * r1)


def test_noether_momentum(free_particle):
    C = nl.noether_first_integral(
        free_particle, nl.catalog_generator("space-translation-1", 1)
    )
    assert C(0.0, [5.0], [3.0]) == pytest.approx(3.0)


def test_noether_energy(oscillator):
    C = nl.noether_first_integral(
        oscillator, nl.catalog_generator("time-translation", 1)
    )
    # C = L - v dL/dv = -(v^2 + x^2)/2, minus the Hamiltonian
    assert C(0.0, [1.0], [2.0]) == pytest.approx(-2.5)
    assert C(0.0, [1.0], [2.0]) == pytest.approx(
        -nl.hamiltonian(oscillator, 0.0, [1.0], [2.0])
    )


def test_hamiltonian_identity_random(oscillator, free_particle):
    rng = np.random.default_rng(2)
    for L in (oscillator, free_particle):
        for _ in range(50):
            t = float(rng.uniform(0, 1))
            x = rng.uniform(-2, 2, size=1)
            v = rng.uniform(-2, 2, size=1)
            h = nl.hamiltonian(L, t, x, v)
            direct = -L(t, x, v) + float(v @ L.partial("v", t, x, v))
            assert abs(h - direct) <= 1e-12


def test_conservation_momentum_on_line(line_space, free_particle):
    grid = nl.Grid(0.0, 1.0, 100)
    x = nl.Curve.from_function(line_space, grid, lambda t: [2.0 * t])
    C = nl.noether_first_integral(
        free_particle, nl.catalog_generator("space-translation-1", 1)
    )
    rep = nl.verify_conservation(C, x, tol=1e-8)
    assert rep.passed
    assert rep.mean == pytest.approx(2.0, abs=1e-10)


def test_conservation_energy_on_oscillator(line_space, oscillator):
    grid = nl.Grid(0.0, np.pi, 400)
    x = nl.Curve.from_function(line_space, grid, lambda t: [np.sin(t)])
    C = nl.noether_first_integral(
        oscillator, nl.catalog_generator("time-translation", 1)
    )
    rep = nl.verify_conservation(C, x, tol=1e-3)
    assert rep.passed
    assert rep.mean == pytest.approx(-0.5, abs=1e-3)


def test_conservation_fails_for_nonconserved_quantity(line_space):
    grid = nl.Grid(0.0, 1.0, 100)
    x = nl.Curve.from_function(line_space, grid, lambda t: [t * t])
    C = nl.FirstIntegral(dim=1, evaluator=lambda t, xx, vv: float(vv[0]))
    rep = nl.verify_conservation(C, x, tol=1e-6)
    # v = 2t sweeps [0, 2]: mean 1, max deviation 1, relative deviation 1/2
    assert not rep.passed
    assert rep.mean == pytest.approx(1.0, abs=1e-6)
    assert rep.relative_deviation == pytest.approx(0.5, abs=1e-6)


def test_find_affine_symmetries_free_particle(free_particle):
    gens = nl.find_affine_symmetries(free_particle)
    assert len(gens) >= 3
    for g in gens:
        assert nl.check_invariance(free_particle, g, tol=1e-6).passed
    # time translation, space translation, and the scaling T = t, X = x/2
    # must all lie in the recovered span
    coeff = np.array([g.coefficients for g in gens])
    for target in (
        [1, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0, 0.5],
    ):
        target = np.asarray(target, float)
        sol, *_ = np.linalg.lstsq(coeff.T, target, rcond=None)
        assert np.max(np.abs(coeff.T @ sol - target)) <= 1e-6


def test_find_affine_symmetries_oscillator(oscillator):
    gens = nl.find_affine_symmetries(oscillator)
    assert len(gens) >= 1
    # space translation is not a symmetry: no recovered generator combination
    # reproduces it
    coeff = np.array([g.coefficients for g in gens])
    target = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    sol, *_ = np.linalg.lstsq(coeff.T, target, rcond=None)
    assert np.max(np.abs(coeff.T @ sol - target)) > 1e-3


def test_find_affine_symmetries_time_dependent():
    L = nl.compile_field("exp(t)*v1^2", dim=1)
    gens = nl.find_affine_symmetries(L)
    coeff = np.array([g.coefficients for g in gens]) if gens else np.zeros((0, 6))
    target = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    if len(coeff):
        sol, *_ = np.linalg.lstsq(coeff.T, target, rcond=None)
        assert np.max(np.abs(coeff.T @ sol - target)) > 1e-3


def test_found_symmetries_yield_conserved_integrals(line_space, free_particle):
    grid = nl.Grid(0.0, 1.0, 200)
    sp = line_space
    x = nl.solve_extremal(
        free_particle,
        nl.BoundaryConditions([0.0], [1.0]),
        grid,
        sp,
        nl.SolverConfig(),
    )
    for g in nl.find_affine_symmetries(free_particle):
        C = nl.noether_first_integral(free_particle, g)
        assert nl.verify_conservation(C, x, tol=1e-6).passed
