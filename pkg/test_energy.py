#!/usr/bin/env python3
"""
Test max cut, multiway cuts, partition functions, ground state energies
and the hom-number relations
"""

from math import log

import numpy as np

from limitforge.utils.config import override_settings, reset_settings
from limitforge.utils.energy import (
    balanced_sizes,
    cut_hom_sandwich,
    density_gap_d,
    energy_graphon,
    ground_state_energy,
    hom_star,
    maxcut,
    mcut_hom_gap,
    mmcut,
    node_weight_shift,
    partition_functions,
    right_quantities,
    rmcut,
    rmcut_hom_gap,
)
from limitforge.utils.errors import DomainError, SizeBoundExceeded
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import WeightedGraph, named_graph
from limitforge.utils.graphon import builtin
from limitforge.utils.state import EstimationMethod, GraphFamily, Mode, PartitionVariant

CUT = [[0.0, 1.0], [1.0, 0.0]]


def test_maxcut_small_graphs():
    """K4 cuts 4 edges, C5 cuts 4, both divided by n^2"""
    print("🧪 Testing max cut")
    k4 = maxcut(named_graph("K4"))
    assert np.isclose(k4.value, 4 / 16) and len(k4.witness) == 2
    assert np.isclose(maxcut(named_graph("C5")).value, 4 / 25)
    g = generate(GraphFamily.ER, seed=5, n=14, p=0.5)
    exact = maxcut(g, Mode.EXACT)
    local = maxcut(g, Mode.LOCAL, seed=1)
    assert not local.exact
    assert local.value <= exact.value + 1e-12
    print(f"✅ Exact {exact.value:.4f}, local {local.value:.4f}")


def test_mmcut_and_ground_state():
    """mmcut with the cut matrix doubles max cut; ground state is -mmcut(G, -J)"""
    g = named_graph("petersen")
    assert np.isclose(mmcut(g, CUT).value, 2 * maxcut(g).value)
    j = [[1.0, -0.5], [-0.5, 0.3]]
    ground = ground_state_energy(g, j)
    assert np.isclose(ground.value, -mmcut(g, -np.array(j)).value)
    try:
        mmcut(g, [[0.0, 1.0], [0.5, 0.0]])
    except DomainError:
        print("✅ Asymmetric beta rejected")
    else:
        raise AssertionError("beta must be symmetric")


def test_enumeration_limit():
    override_settings(enumeration_limit=100)
    try:
        mmcut(named_graph("petersen"), CUT)
    except SizeBoundExceeded as e:
        assert e.bound == "enumeration_limit"
        print(f"✅ {e}")
    else:
        raise AssertionError("2^10 maps exceed a limit of 100")
    finally:
        reset_settings()


def test_balanced_sizes():
    assert sorted(balanced_sizes([1, 1], 5)) == [(2, 3), (3, 2)]
    assert balanced_sizes([1, 2], 3) == [(1, 2)]
    assert balanced_sizes([0.5, 0.5], 4) == [(2, 2)]
    try:
        balanced_sizes([1, 0], 3)
    except DomainError:
        pass
    else:
        raise AssertionError("zero node weight must fail")


def test_rmcut_is_restricted_mmcut():
    """Balanced partitions are a subset of all partitions"""
    g = generate(GraphFamily.ER, seed=2, n=9, p=0.5)
    h = WeightedGraph(np.ones(2), np.array(CUT))
    restricted = rmcut(g, h)
    assert restricted.value <= mmcut(g, CUT).value + 1e-12
    counts = np.bincount(restricted.assignment, minlength=2)
    assert sorted(counts.tolist()) == [4, 5]
    local = rmcut(g, h, Mode.LOCAL, seed=3)
    assert local.value <= restricted.value + 1e-12
    assert sorted(np.bincount(local.assignment, minlength=2).tolist()) == [4, 5]


def test_partition_function_free_case():
    """J = 0: every map has energy 0, so ln Z = n ln q"""
    g = named_graph("C5")
    zero = np.zeros((3, 3))
    for variant in PartitionVariant:
        pf = partition_functions(g, zero, variant)
        assert np.isclose(pf.log_z, 5 * log(3))
        assert np.isclose(pf.free_energy, -log(3))


def test_partition_function_monte_carlo():
    g = generate(GraphFamily.ER, seed=1, n=8, p=0.5)
    j = [[0.5, -0.2], [-0.2, 0.1]]
    exact = partition_functions(g, j, PartitionVariant.MEANFIELD)
    mc = partition_functions(g, j, PartitionVariant.MEANFIELD, EstimationMethod.MC, samples=50000, seed=4)
    assert not mc.exact
    assert abs(mc.log_z - exact.log_z) <= 5 * mc.log_z_stderr + 1e-3
    try:
        partition_functions(g, j, method=EstimationMethod.MC)
    except DomainError:
        print("✅ Monte Carlo needs a seed")
    else:
        raise AssertionError("Monte Carlo without a seed must fail")


def test_cut_hom_sandwich():
    print("🧪 Testing hom-number sandwiches")
    for g in (named_graph("C5"), named_graph("petersen"), generate(GraphFamily.ER, seed=7, n=12, p=0.4)):
        row = cut_hom_sandwich(g)
        assert row["holds"], row
    print("✅ maxcut <= log2 hom / n^2 <= maxcut + 1/n")


def test_multicut_gaps():
    g = generate(GraphFamily.ER, seed=3, n=8, p=0.5)
    beta = [[0.2, 1.0, 0.4], [1.0, 0.0, 0.7], [0.4, 0.7, 0.1]]
    gap = mcut_hom_gap(g, beta)
    assert -1e-12 <= gap["gap"] <= gap["bound"] + 1e-12
    h = WeightedGraph(np.ones(2), np.array([[0.3, 1.0], [1.0, 0.2]]))
    restricted = rmcut_hom_gap(g, h)
    assert -1e-12 <= restricted["gap"] <= restricted["bound"] + 1e-12


def test_right_side_helpers():
    g = named_graph("C5")
    h = WeightedGraph(np.array([1.0, 2.0]), np.array([[0.5, 1.0], [1.0, 0.2]]))
    assert np.isclose(node_weight_shift(g, h, 3.0), 5 * log(3.0))
    assert density_gap_d(WeightedGraph(np.ones(3), np.full((3, 3), 0.4))) == 0.0
    try:
        density_gap_d(WeightedGraph(np.ones(2), np.zeros((2, 2))))
    except DomainError:
        pass
    else:
        raise AssertionError("D(H) needs a positive weight")


def test_hom_star_counts_balanced_maps():
    """All-ones weights count balanced maps; one class gives beta^|E|"""
    c4 = named_graph("C4")
    ones = hom_star(c4, WeightedGraph(np.ones(2), np.ones((2, 2))))
    assert ones.maps == 6 and np.isclose(ones.value, 6.0)
    single = hom_star(c4, WeightedGraph(np.ones(1), np.array([[0.5]])))
    assert np.isclose(single.value, 0.5 ** 4)
    assert np.isclose(single.log_value, 4 * log(0.5))


def test_right_quantities():
    odd = right_quantities(named_graph("C5"), WeightedGraph.from_graph(named_graph("K2")))
    assert odd["hom"] == 0 and odd["u"] == float("-inf")
    k3 = WeightedGraph.from_graph(named_graph("K3"))
    row = right_quantities(named_graph("C5"), k3)
    assert np.isclose(row["D"], 1 / 3)
    assert np.isclose(row["u"], log(30) / 5)


def test_energy_graphon_half_bipartite():
    """Splitting each half into its own class recovers all of the edge mass"""
    w = builtin("half_bipartite")
    h = WeightedGraph(np.ones(2), np.array(CUT))
    result = energy_graphon(w, h, restarts=4, seed=1)
    assert result.is_lower_bound
    assert np.isclose(result.value, 0.5, atol=1e-6)
    assert np.allclose(result.split.sum(axis=1), w.p)


if __name__ == "__main__":
    print("🚀 Energy tests")
    print("=" * 60)
    test_maxcut_small_graphs()
    test_mmcut_and_ground_state()
    test_enumeration_limit()
    test_balanced_sizes()
    test_rmcut_is_restricted_mmcut()
    test_partition_function_free_case()
    test_partition_function_monte_carlo()
    test_cut_hom_sandwich()
    test_multicut_gaps()
    test_right_side_helpers()
    test_hom_star_counts_balanced_maps()
    test_right_quantities()
    test_energy_graphon_half_bipartite()
    print("\n🎉 Energy tests complete!")
