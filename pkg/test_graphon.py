#!/usr/bin/env python3
"""
Test graphons: step graphons, built-ins, exact and Monte Carlo densities,
and W-random graphs
"""

import numpy as np

from limitforge.utils.errors import DomainError, InvalidGraphError, UnknownNameError
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import WeightedGraph, named_graph
from limitforge.utils.graphon import (
    BUILTINS,
    KNOWN_DENSITIES,
    StepGraphon,
    builtin,
    first_differing_bit,
    graph_step,
    step_from_weighted,
    t_graphon,
    t_ind_graphon,
    validate_graphon,
    w_random,
)
from limitforge.utils.homcount import density
from limitforge.utils.state import DensityKind, EstimationMethod, GraphFamily


def test_step_graphon_validation():
    print("🧪 Testing step graphon validation")
    for p, B in (([0.5, 0.4], [[0, 1], [1, 0]]),
                 ([0.5, 0.5], [[0, 1], [0.5, 0]]),
                 ([1.0], [[1.5]]),
                 ([0.5, 0.5], [[0.2]])):
        try:
            StepGraphon(p, B)
        except InvalidGraphError as e:
            print(f"✅ Rejected: {e}")
        else:
            raise AssertionError(f"p={p}, B={B} should be rejected")


def test_graph_step_reproduces_graph_densities():
    """t(F, W_G) = t(F, G) and t_ind(F, W_G) = t_ind counted with repetition"""
    g = generate(GraphFamily.ER, seed=8, n=9, p=0.5)
    w = graph_step(g)
    for name in ("K2", "K3", "P3", "C4"):
        est, stderr = t_graphon(named_graph(name), w)
        assert stderr == 0.0
        assert np.isclose(est, density(DensityKind.T, named_graph(name), g)), name
    print("✅ W_G densities match")


def test_half_bipartite():
    w = builtin("half_bipartite")
    assert np.isclose(t_graphon(named_graph("K2"), w)[0], 0.5)
    assert t_graphon(named_graph("K3"), w)[0] == 0.0
    assert np.isclose(t_ind_graphon(named_graph("K2"), w)[0], 0.5)
    # two points in the same half: the non-edge always holds
    assert np.isclose(t_ind_graphon(named_graph("O2"), w)[0], 0.5)


def test_builtins_are_symmetric_and_bounded():
    print("🧪 Validating built-in graphons")
    for name in BUILTINS:
        report = validate_graphon(builtin(name), samples=20000, seed=1)
        assert report["max_asymmetry"] == 0.0, name
        assert 0.0 <= report["min_value"] <= report["max_value"] <= 1.0, name
        print(f"✅ {name}")


def test_known_densities_by_monte_carlo():
    """Closed forms lie within five standard errors of the estimate"""
    print("🧪 Monte Carlo against closed forms")
    for (name, pattern), expected in KNOWN_DENSITIES.items():
        est, stderr = t_graphon(named_graph(pattern), builtin(name), EstimationMethod.MC, samples=200000, seed=3)
        assert abs(est - expected) <= 5 * stderr + 1e-9, (name, pattern, est, expected)
        print(f"✅ t({pattern}, {name}) = {est:.4f} (expected {expected:.4f})")


def test_bit_parity_edge_density():
    """First differing digit is odd with probability 1/2 + 1/8 + ... = 2/3"""
    assert first_differing_bit(np.array([0.5]), np.array([0.25]))[0] == 1
    assert first_differing_bit(np.array([0.5]), np.array([0.75]))[0] == 2
    assert first_differing_bit(np.array([0.3]), np.array([0.3]))[0] == 0
    est, stderr = t_graphon(named_graph("K2"), builtin("bit_parity"), EstimationMethod.MC, samples=100000, seed=5)
    assert abs(est - 2 / 3) <= 5 * stderr


def test_estimation_errors():
    try:
        t_graphon(named_graph("K2"), builtin("ua_limit"))
    except DomainError:
        print("✅ Exact density needs a step graphon")
    else:
        raise AssertionError("exact density of a function graphon must fail")
    try:
        t_graphon(named_graph("K2"), builtin("ua_limit"), EstimationMethod.MC)
    except DomainError:
        print("✅ Monte Carlo needs a seed")
    else:
        raise AssertionError("Monte Carlo without a seed must fail")
    try:
        builtin("no_such_graphon")
    except UnknownNameError:
        pass
    else:
        raise AssertionError("unknown graphon name must fail")


def test_w_random_graph():
    """Deterministic given the seed, edge density close to t(K2, W)"""
    w = builtin("constant", p=0.3)
    a = w_random(300, w, seed=4)
    b = w_random(300, w, seed=4)
    assert a.graph == b.graph
    assert np.array_equal(a.points, b.points)
    edge_density = a.graph.num_edges / (300 * 299 / 2)
    assert abs(edge_density - 0.3) < 0.02
    pfx = w_random(50, builtin("pfx_limit"), seed=2)
    assert pfx.points.shape == (50, 2)


def test_step_from_weighted():
    """Masses alpha_i / alpha_G; a single node with loop weight 1/2 is the constant 1/2"""
    w = step_from_weighted(WeightedGraph.from_graph(named_graph("K2")))
    assert np.allclose(w.p, [0.5, 0.5])
    assert np.allclose(w.B, [[0.0, 1.0], [1.0, 0.0]])
    loop = step_from_weighted(WeightedGraph(np.ones(1), np.array([[0.5]])))
    assert np.isclose(t_graphon(named_graph("K2"), loop)[0], 0.5)
    uneven = step_from_weighted(WeightedGraph(np.array([1.0, 3.0]), np.full((2, 2), 0.2)))
    assert np.allclose(uneven.p, [0.25, 0.75])
    try:
        step_from_weighted(WeightedGraph(np.ones(2), np.array([[0.0, 2.0], [2.0, 0.0]])))
    except InvalidGraphError:
        print("✅ Edge weights above 1 rejected")
    else:
        raise AssertionError("a graphon needs values in [0, 1]")


if __name__ == "__main__":
    print("🚀 Graphon tests")
    print("=" * 60)
    test_step_graphon_validation()
    test_graph_step_reproduces_graph_densities()
    test_half_bipartite()
    test_builtins_are_symmetric_and_bounded()
    test_known_densities_by_monte_carlo()
    test_bit_parity_edge_density()
    test_estimation_errors()
    test_w_random_graph()
    test_step_from_weighted()
    print("\n🎉 Graphon tests complete!")
