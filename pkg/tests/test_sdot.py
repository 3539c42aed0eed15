import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import quantile_boundaries
from sdot_robust.errors import EmptyCellRank, EmptyCellWarning, NotConverged, OutsideSupport
from sdot_robust.geometry import PowerDiagram
from sdot_robust.measures import DiscreteMeasure, ReferenceMeasure
from sdot_robust.sdot import SampleDual, SolveConfig, TransportMap, dual_value, ranks, solve, transport

CUBE1 = ReferenceMeasure.parse("cube:1")
CUBE2 = ReferenceMeasure.parse("cube:2")
SMALL = SolveConfig(mc_budget=50_000)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(mass_tolerance=0)
    with pytest.raises(ValueError):
        SolveConfig(mc_budget=999)
    with pytest.raises(ValueError):
        SolveConfig(max_iterations=0)


def test_single_atom():
    t = solve(CUBE2, DiscreteMeasure([[3.0, -1.0]], [1.0]))
    np.testing.assert_array_equal(t.weight_vector, [0.0])
    assert t.residual == 0.0
    np.testing.assert_array_equal(t.transport(np.array([[0.1, 0.2], [0.9, 0.7]])), [[3.0, -1.0]] * 2)


def test_two_atoms_one_dimension():
    t = solve(CUBE1, DiscreteMeasure([[0.1], [0.9]], [0.2, 0.8]), SolveConfig(mass_tolerance=1e-4))
    assert t.weight_vector[0] == 0.0
    # (0.2 - 0.1)^2 - w0 = (0.2 - 0.9)^2 - w1 with w0 = 0
    assert t.weight_vector[1] == pytest.approx(0.48, abs=2 * 1e-4 * 2 * 0.8 + 1e-4)
    assert t.diagram.cell_boundary_1d()[0] == pytest.approx(0.2, abs=2e-4)
    assert t.residual <= 1e-4


def test_symmetric_atoms_get_equal_weights():
    cfg = SolveConfig(mass_tolerance=1e-3, mc_budget=200_000)
    t = solve(CUBE2, DiscreteMeasure([[0.2, 0.5], [0.8, 0.5]], [0.5, 0.5]), cfg)
    # a weight gap e moves the bisector by e / (2 * 0.6), which carries mass e / 1.2
    assert abs(t.weight_vector[1] - t.weight_vector[0]) <= 1.2 * (cfg.mass_tolerance + 4 / math.sqrt(cfg.mc_budget))


@pytest.mark.parametrize("seed", range(5))
def test_one_dimensional_boundaries_match_quantiles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    atoms = np.sort(rng.uniform(-2, 3, size=n))[:, None]
    lam = rng.dirichlet(np.ones(n))
    cfg = SolveConfig(mass_tolerance=1e-4, mc_budget=200_000, seed=seed + 1)
    t = solve(CUBE1, DiscreteMeasure(atoms, lam), cfg)
    err = np.max(np.abs(t.diagram.cell_boundary_1d() - quantile_boundaries(lam)))
    assert err <= (n - 1) * 1e-4 + 5 / math.sqrt(cfg.mc_budget)


def test_transport_is_monotone_in_one_dimension(rng):
    atoms = np.sort(rng.uniform(size=6))[:, None]
    t = solve(CUBE1, DiscreteMeasure.from_points(atoms), SMALL)
    grid = np.linspace(0, 1, 1001)[:, None]
    assert np.all(np.diff(t.transport(grid)[:, 0]) >= 0)
    assert np.array_equal(transport(t, grid), t.transport(grid))


def test_transport_rejects_points_outside_support():
    t = solve(CUBE2, DiscreteMeasure([[0.2, 0.5], [0.8, 0.5]], [0.5, 0.5]), SMALL)
    with pytest.raises(OutsideSupport):
        t.transport([1.2, 0.5])


@pytest.mark.parametrize("kind", ["cube", "ball", "sphunif", "gauss"])
def test_pushforward_small(kind):
    ref = ReferenceMeasure.parse(f"{kind}:2")
    rng = np.random.default_rng(4)
    target = DiscreteMeasure.from_points(rng.normal(size=(6, 2)), rng.dirichlet(np.ones(6) * 3))
    cfg = SolveConfig(mc_budget=200_000)
    t = solve(ref, target, cfg)
    assert t.residual <= cfg.mass_tolerance
    fresh = t.diagram.cell_masses(200_000, seed=99)
    np.testing.assert_allclose(fresh, target.weights, atol=4 / math.sqrt(200_000) + t.residual)


@pytest.mark.parametrize("d", [3, 5])
def test_higher_dimensions_converge(d):
    rng = np.random.default_rng(d)
    target = DiscreteMeasure.from_points(rng.uniform(size=(10, d)))
    t = solve(ReferenceMeasure.parse(f"cube:{d}"), target, SMALL)
    assert t.residual <= SMALL.mass_tolerance


def test_dual_is_non_decreasing(rng):
    trace = []
    target = DiscreteMeasure.from_points(rng.uniform(size=(15, 2)), rng.dirichlet(np.ones(15)))
    solve(CUBE2, target, SolveConfig(mass_tolerance=1e-4, mc_budget=100_000), trace=trace)
    assert len(trace) >= 2
    assert np.all(np.diff(trace) >= 0)


def test_gradient_is_weights_minus_masses(rng):
    pts = CUBE2.sample(20_000, seed=2)
    atoms = rng.uniform(size=(5, 2))
    lam = rng.dirichlet(np.ones(5))
    dual = SampleDual(pts, atoms, lam)
    h = rng.normal(scale=0.05, size=5)
    F, g, masses, _ = dual(h)
    np.testing.assert_allclose(g, lam - masses)
    # F is piecewise linear on the fixed sample, so tiny one-sided differences recover g
    e = 1e-9
    for j in range(5):
        hp = h.copy()
        hp[j] += e
        assert (dual(hp)[0] - F) / e == pytest.approx(g[j], abs=1e-3)


def test_dual_value_matches_sample_dual(rng):
    pts = CUBE2.sample(10_000, seed=2)
    atoms = rng.uniform(size=(4, 2))
    lam = rng.dirichlet(np.ones(4))
    dual = SampleDual(pts, atoms, lam)
    h1, h2 = rng.normal(scale=0.05, size=(2, 4))
    direct = dual_value(pts, atoms, lam, dual.to_w(h2)) - dual_value(pts, atoms, lam, dual.to_w(h1))
    assert direct == pytest.approx(dual(h2)[0] - dual(h1)[0], abs=1e-9)
    np.testing.assert_allclose(dual.from_w(dual.to_w(h1)) - h1, np.full(4, (dual.from_w(dual.to_w(h1)) - h1)[0]))


def test_hessian_is_a_laplacian(rng):
    pts = CUBE2.sample(50_000, seed=2)
    dual = SampleDual(pts, rng.uniform(size=(6, 2)), np.full(6, 1 / 6))
    H = dual(np.zeros(6), hessian=True)[3]
    np.testing.assert_allclose(H, H.T)
    np.testing.assert_allclose(H.sum(axis=1), 0, atol=1e-9)
    assert np.all(np.linalg.eigvalsh(H) >= -1e-9)


def test_translation_equivariance_is_exact(rng):
    target = DiscreteMeasure.from_points(rng.uniform(size=(8, 2)))
    shift = np.array([100.0, -50.0])
    moved = DiscreteMeasure(target.atoms + shift, target.weights)
    a = solve(CUBE2, target, SMALL)
    b = solve(CUBE2, moved, SMALL)
    pts = CUBE2.sample(10_000, seed=17)
    np.testing.assert_array_equal(a.classify(pts), b.classify(pts))
    np.testing.assert_allclose(b.transport(pts), a.transport(pts) + shift, rtol=0, atol=1e-12)


def test_gauge_invariance(rng):
    t = solve(CUBE2, DiscreteMeasure.from_points(rng.uniform(size=(6, 2))), SMALL)
    pts = CUBE2.sample(5000, seed=3)
    shifted = PowerDiagram(t.target.atoms, t.weight_vector + 0.25, CUBE2)
    np.testing.assert_array_equal(shifted.classify(pts), t.classify(pts))


def test_solve_is_deterministic(rng):
    target = DiscreteMeasure.from_points(rng.uniform(size=(7, 2)))
    np.testing.assert_array_equal(solve(CUBE2, target, SMALL).weight_vector,
                                  solve(CUBE2, target, SMALL).weight_vector)


def test_not_converged_after_iteration_cap(rng):
    target = DiscreteMeasure.from_points(rng.uniform(size=(12, 2)), rng.dirichlet(np.ones(12)))
    with pytest.raises(NotConverged) as info:
        solve(CUBE2, target, SolveConfig(mass_tolerance=1e-6, max_iterations=1, mc_budget=20_000))
    assert info.value.residual > 1e-6


def test_empty_initial_cell_warns_and_recovers():
    rng = np.random.default_rng(0)
    atoms = np.vstack([rng.uniform(0.49, 0.51, size=(10, 2)), [[0.0, 0.0], [1.0, 1.0]]])
    with pytest.warns(EmptyCellWarning):
        t = solve(CUBE2, DiscreteMeasure.from_points(atoms), SolveConfig(mc_budget=20_000))
    assert t.residual <= 1e-3


def test_ranks_single_atom_and_one_dimension():
    t = solve(CUBE2, DiscreteMeasure([[0.3, 0.3]], [1.0]))
    np.testing.assert_allclose(ranks(t, 100_000, seed=1), [[0.5, 0.5]], atol=4 * 0.29 / math.sqrt(1e5))
    t1 = solve(CUBE1, DiscreteMeasure([[0.1], [0.9]], [0.2, 0.8]), SolveConfig(mass_tolerance=1e-4))
    np.testing.assert_allclose(t1.ranks(200_000, seed=1)[:, 0], [0.1, 0.6], atol=2e-3)


def test_ranks_symmetric_halves():
    t = solve(CUBE2, DiscreteMeasure([[0.2, 0.5], [0.8, 0.5]], [0.5, 0.5]), SolveConfig(mc_budget=200_000))
    r = ranks(t, 200_000, seed=1)
    np.testing.assert_allclose(r[0] + r[1], [1.0, 1.0], atol=5e-3)
    np.testing.assert_allclose(r[0], [0.25, 0.5], atol=5e-3)


def test_empty_cell_rank():
    d = PowerDiagram([[0.2, 0.5], [0.8, 0.5]], [0.0, -10.0], CUBE2)
    t = TransportMap(d, DiscreteMeasure([[0.2, 0.5], [0.8, 0.5]], [0.5, 0.5]), residual=0.5)
    with pytest.raises(EmptyCellRank) as info:
        ranks(t, 1000, seed=1)
    assert info.value.to_dict()["index"] == 1


@settings(max_examples=10)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_residual_within_tolerance(n, seed):
    rng = np.random.default_rng(seed)
    target = DiscreteMeasure.from_points(rng.normal(size=(n, 2)), rng.dirichlet(np.ones(n)))
    t = solve(ReferenceMeasure.parse("gauss:2"), target, SolveConfig(mc_budget=20_000))
    assert t.residual <= 1e-3
