#!/usr/bin/env python3
"""
Test sample distributions, neighbourhood reconstruction, the testing
harnesses, the quasirandom battery and convergence diagnostics
"""

import time
from fractions import Fraction

import numpy as np

from limitforge.utils.errors import DomainError, InvalidGraphError, SizeBoundExceeded
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import SimpleGraph, canonical_form, named_graph
from limitforge.utils.graphon import builtin
from limitforge.utils.regularity import SamplingOracle
from limitforge.utils.sampling import (
    ball,
    class_probability_from_tind,
    concentration_harness,
    convergence_diagnostic,
    limit_target,
    parameter_test,
    quasirandom_battery,
    rho,
    rho_from_s,
    sampling_lemma_harness,
    sigma,
)
from limitforge.utils.state import GraphFamily, Mode


def edge_density(g: SimpleGraph) -> float:
    return 2 * g.num_edges / (g.n * g.n)


def test_sigma_exact_on_cycle():
    """Triples of C5 induce a path or an edge plus a node, half each"""
    print("🧪 Testing subgraph sample distributions")
    dist = sigma(named_graph("C5"), 3)
    assert dist.total() == 1
    assert dist.probability(canonical_form(named_graph("P3"))) == Fraction(1, 2)
    edge_plus_node = SimpleGraph.from_edges(3, [(0, 1)])
    assert dist.probability(canonical_form(edge_plus_node)) == Fraction(1, 2)
    assert dist.probability(canonical_form(named_graph("K3"))) == 0
    frame = dist.to_frame()
    assert list(frame.columns) == ["nodes", "edges", "edge_list", "root", "probability", "exact"]
    assert len(frame) == 2
    print("✅ sigma(C5, 3) is exact")


def test_sigma_matches_induced_density():
    g = generate(GraphFamily.ER, seed=6, n=10, p=0.5)
    dist = sigma(g, 4)
    for name in ("C4", "P4", "paw", "star3"):
        f = named_graph(name)
        assert dist.probability(canonical_form(f)) == class_probability_from_tind(f, g), name


def test_sigma_empirical_and_limits():
    g = generate(GraphFamily.ER, seed=6, n=12, p=0.5)
    exact = sigma(g, 3)
    empirical = sigma(g, 3, Mode.EMPIRICAL, trials=20000, seed=1)
    assert empirical.total() == 1
    assert exact.tv_distance(empirical) < 0.05
    for call, error in ((lambda: sigma(g, 13), DomainError),
                        (lambda: sigma(g, 7), SizeBoundExceeded),
                        (lambda: sigma(g, 3, Mode.EMPIRICAL), DomainError)):
        try:
            call()
        except error:
            pass
        else:
            raise AssertionError(f"expected {error.__name__}")


def test_rho_on_regular_graphs():
    """Every 1-ball of a 3-regular graph is a star rooted at its centre"""
    print("🧪 Testing neighbourhood distributions")
    petersen = named_graph("petersen")
    dist = rho(petersen, 1, 3)
    assert len(dist.probabilities) == 1
    assert dist.probability(canonical_form(named_graph("star3"), root=0)) == 1
    b = ball(petersen, 4, 1, 3)
    assert b.root == 0 and b.graph.n == 4
    try:
        rho(named_graph("K4"), 1, 2)
    except InvalidGraphError:
        print("✅ Degree bound enforced")
    else:
        raise AssertionError("K4 exceeds degree bound 2")


def test_rho_from_s_matches_rho():
    for seed in range(4):
        g = generate(GraphFamily.RANDOM_BOUNDED_DEGREE, seed=seed, n=12, d=3)
        for r in (1, 2):
            assert rho_from_s(g, r, 3).probabilities == rho(g, r, 3).probabilities, (seed, r)
    print("✅ Reconstruction matches direct neighbourhood counts")
    try:
        rho_from_s(generate(GraphFamily.CYCLE, n=40), 1, 2)
    except SizeBoundExceeded:
        pass
    else:
        raise AssertionError("40 nodes exceed the reconstruction limit")


def test_concentration_harness():
    g = generate(GraphFamily.ER, seed=3, n=80, p=0.5)
    report = concentration_harness(edge_density, g, k=20, trials=200, seed=1)
    assert report.trials == 200 and len(report.tails) == 4
    assert (report.tails["violation_rate"] <= 1.0).all()
    assert abs(report.median - 0.5) < 0.15


def test_parameter_test_on_graphon():
    """Edge density of sampled subgraphs estimates t(K2, W)"""
    oracle = SamplingOracle(builtin("constant", p=0.4), seed=2)
    estimate = parameter_test(edge_density, oracle, k=60, trials=40, seed=3)
    assert abs(estimate.estimate - 0.4 * 59 / 60) < 0.05
    assert estimate.spread >= 0.0


def test_sampling_lemma_harness():
    g = generate(GraphFamily.ER, seed=4, n=14, p=0.5)
    h = generate(GraphFamily.ER, seed=5, n=14, p=0.5)
    table = sampling_lemma_harness(g, k=8, trials=30, seed=1, h=h, bracket_trials=3)
    assert list(table["lemma"]) == ["aligned-sample", "sample-distance"]
    assert table.loc[1, "trials"] == 3
    assert (table["violation_rate"] <= table["allowed_rate"] + 1e-12).all()
    every = sampling_lemma_harness(g, k=4, trials=6, seed=2)
    assert list(every["lemma"]) == ["sample-distance"]
    assert every.loc[0, "trials"] == 6
    try:
        sampling_lemma_harness(g, k=1, trials=5, seed=0)
    except DomainError:
        pass
    else:
        raise AssertionError("k = 1 is too small")


def test_quasirandom_battery():
    """Paley graphs pass every row; K_{n,n} fails on codegrees"""
    print("🧪 Testing the quasirandom battery")
    paley = quasirandom_battery(generate(GraphFamily.PALEY, p=401), 0.5)
    assert paley["passed"].all(), paley
    bipartite = quasirandom_battery(generate(GraphFamily.COMPLETE_BIPARTITE, a=60, b=60), 0.5)
    codegree = bipartite[bipartite["measure"] == "codegree"].iloc[0]
    assert not codegree["passed"]
    degree = bipartite[bipartite["measure"] == "degree"].iloc[0]
    assert degree["passed"]
    print("✅ Battery separates Paley from K_{n,n}")


def test_quasirandom_battery_large_paley():
    """Half-size subsets of a 1009-node graph are drawn quickly"""
    started = time.perf_counter()
    table = quasirandom_battery(generate(GraphFamily.PALEY, p=1009), 0.5, seed=2)
    elapsed = time.perf_counter() - started
    assert table["passed"].all(), table
    assert elapsed < 300, elapsed
    print(f"✅ Paley(1009) battery in {elapsed:.1f}s")


def test_quasirandom_battery_catches_a_hub():
    """One vertex joined to everything fails the degree row"""
    g = generate(GraphFamily.ER, seed=5, n=400, p=0.5)
    hub = SimpleGraph.from_edges(401, list(g.edges) + [(v, 400) for v in range(400)])
    table = quasirandom_battery(hub, 0.5)
    degree = table[table["measure"] == "degree"].iloc[0]
    assert degree["deviation"] > 0.9
    assert not degree["passed"]


def test_convergence_diagnostic():
    table = convergence_diagnostic(GraphFamily.UNIFORM_ATTACHMENT, [200, 400], ["K2", "K3"], seed=1,
                                   replicates=2)
    assert len(table) == 4
    assert (table["stderr"] > 0).all()
    last = table[(table["n"] == 400) & (table["F"] == "K2")].iloc[0]
    assert abs(last["t"] - 1 / 3) < 0.02
    assert last["target"] == 1 / 3
    target, stderr = limit_target(GraphFamily.ER, "K3", samples=1000, seed=0, params={"p": 0.5})
    assert np.isclose(target, 0.125) and stderr == 0.0
    assert limit_target(GraphFamily.GRID, "K2", samples=1000, seed=0) == (None, 0.0)


if __name__ == "__main__":
    print("🚀 Sampling tests")
    print("=" * 60)
    test_sigma_exact_on_cycle()
    test_sigma_matches_induced_density()
    test_sigma_empirical_and_limits()
    test_rho_on_regular_graphs()
    test_rho_from_s_matches_rho()
    test_concentration_harness()
    test_parameter_test_on_graphon()
    test_sampling_lemma_harness()
    test_quasirandom_battery()
    test_quasirandom_battery_large_paley()
    test_quasirandom_battery_catches_a_hub()
    test_convergence_diagnostic()
    print("\n🎉 Sampling tests complete!")
