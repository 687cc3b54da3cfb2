#!/usr/bin/env python3
"""
Test homomorphism counting: exact counts on small graphs, densities,
inclusion-exclusion, weighted targets and the fast paths
"""

import itertools
from fractions import Fraction

import numpy as np

from limitforge.utils.config import override_settings, reset_settings
from limitforge.utils.errors import DomainError, SizeBoundExceeded
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import KLabeledGraph, Multigraph, QuantumGraph, SimpleGraph, WeightedGraph, named_graph
from limitforge.utils.homcount import (
    closed_walks,
    count,
    cycle_spectrum,
    density,
    density_exact,
    distinct_tuples,
    eval_quantum,
    fast_hom,
    hom_weighted,
    ind_deg,
    injective_gap_bound,
    rooted_automorphisms,
    s_density,
    sampled_density,
    supergraphs,
    transform,
)
from limitforge.utils.state import CountKind, DensityKind, GraphFamily, SparseKind, TransformDirection


def test_small_counts():
    """Hand-checked counts"""
    print("🧪 Testing exact counts")
    k2, k3, p3 = named_graph("K2"), named_graph("K3"), named_graph("P3")
    assert count(CountKind.HOM, k2, k3) == 6
    assert count(CountKind.HOM, k3, k2) == 0
    assert count(CountKind.HOM, p3, k2) == 2
    assert count(CountKind.INJ, p3, k3) == 6
    assert count(CountKind.IND, p3, k3) == 0
    assert count(CountKind.IND, p3, named_graph("P4")) == 4
    assert count(CountKind.HOM, named_graph("K1"), k3) == 3
    print("✅ Small counts match")


def test_edge_density_formula():
    """t(K2, G) = 2|E| / n^2"""
    g = generate(GraphFamily.ER, seed=4, n=15, p=0.4)
    assert density_exact(DensityKind.T, named_graph("K2"), g) == Fraction(2 * g.num_edges, 15 ** 2)
    assert density(DensityKind.T_INJ, named_graph("K2"), g) == 2 * g.num_edges / (15 * 14)


def test_densities_need_room():
    try:
        density(DensityKind.T_IND, named_graph("K4"), named_graph("K3"))
    except DomainError as e:
        print(f"✅ {e}")
    else:
        raise AssertionError("t_ind with |V(F)| > |V(G)| is undefined")
    try:
        density(DensityKind.T, named_graph("K2"), SimpleGraph.empty(0))
    except DomainError:
        pass
    else:
        raise AssertionError("density into the empty graph is undefined")


def test_injective_gap():
    """|t_inj - t| is covered by C(k,2)/n"""
    g = generate(GraphFamily.ER, seed=9, n=12, p=0.5)
    for name in ("K3", "P3", "C4", "star3"):
        f = named_graph(name)
        gap = abs(density(DensityKind.T_INJ, f, g) - density(DensityKind.T, f, g))
        assert gap <= injective_gap_bound(f, g) + 1e-12, name


def test_inclusion_exclusion_transform():
    """t_inj of P3 is t_ind(P3) + t_ind(K3), and the inverse transform recovers t_ind"""
    print("🧪 Testing inclusion-exclusion")
    g = generate(GraphFamily.ER, seed=5, n=10, p=0.5)
    f = named_graph("P3")
    lattice = supergraphs(f)
    assert len(lattice) == 2
    ind = [density(DensityKind.T_IND, h, g) for h in lattice]
    inj = [density(DensityKind.T_INJ, h, g) for h in lattice]
    assert np.allclose(transform(TransformDirection.INJ_FROM_IND, ind, f), inj)
    assert np.allclose(transform(TransformDirection.IND_FROM_INJ, inj, f), ind)
    try:
        transform(TransformDirection.IND_FROM_INJ, [0.1, 0.2, 0.3], f)
    except DomainError:
        print("✅ Wrong vector length rejected")
    else:
        raise AssertionError("vector length must match the lattice")


def test_weighted_targets_and_multigraphs():
    """Weighted hom with unit weights matches the plain count; multi-edges use beta powers"""
    g = named_graph("C5")
    h = WeightedGraph.from_graph(g)
    assert np.isclose(hom_weighted(named_graph("P3"), h), count(CountKind.HOM, named_graph("P3"), g))
    half = WeightedGraph(np.ones(2), np.array([[0.0, 0.5], [0.5, 0.0]]))
    double_edge = Multigraph(2, ((0, 1), (0, 1)))
    assert np.isclose(hom_weighted(double_edge, half), 2 * 0.25)


def test_sparse_densities():
    g = generate(GraphFamily.GRID, n=4)
    assert s_density(SparseKind.S, named_graph("K2"), g) == 2 * g.num_edges / 16
    try:
        s_density(SparseKind.S, named_graph("2K2"), g)
    except DomainError:
        print("✅ Disconnected pattern rejected")
    else:
        raise AssertionError("sparse densities need connected F")


def test_degree_constrained_and_automorphisms():
    p4 = named_graph("P4")
    assert ind_deg(named_graph("K2"), {0: 1}, p4) == 2
    assert rooted_automorphisms(named_graph("C4")) == 8
    assert rooted_automorphisms(named_graph("C4"), root=0) == 2
    assert rooted_automorphisms(named_graph("petersen")) == 120


def test_cycle_spectrum():
    """Closed walks equal the eigenvalue power sum"""
    g = generate(GraphFamily.PALEY, p=29)
    for k in (3, 4, 5):
        row = cycle_spectrum(g, k)
        assert row["relative_difference"] < 1e-9
    try:
        cycle_spectrum(g, 2)
    except DomainError:
        pass
    else:
        raise AssertionError("k = 2 is not a cycle")


def test_fast_hom_agrees_with_count():
    g = generate(GraphFamily.ER, seed=21, n=14, p=0.4)
    for name in ("K1", "K2", "P3", "P4", "star3", "K3", "C4", "C5", "paw"):
        f = named_graph(name)
        assert fast_hom(f, g) == count(CountKind.HOM, f, g), name
    print("✅ Fast paths agree")


def test_sampled_density_close_to_exact():
    g = generate(GraphFamily.ER, seed=3, n=40, p=0.5)
    f = named_graph("K3")
    exact = density(DensityKind.T, f, g)
    est, stderr = sampled_density(DensityKind.T, f, g, samples=50000, seed=1)
    assert abs(est - exact) <= 5 * stderr + 1e-3
    est_ind, stderr_ind = sampled_density(DensityKind.T_IND, named_graph("P3"), g, samples=50000, seed=2)
    assert abs(est_ind - density(DensityKind.T_IND, named_graph("P3"), g)) <= 5 * stderr_ind + 1e-3


def test_work_bound():
    """Exact counting refuses jobs above hom_work_bound"""
    override_settings(hom_work_bound=1000)
    try:
        count(CountKind.HOM, named_graph("K4"), SimpleGraph.complete(10))
    except SizeBoundExceeded as e:
        assert e.bound == "hom_work_bound" and e.exit_code == 3
        print(f"✅ {e}")
    else:
        raise AssertionError("10^4 maps exceed a bound of 1000")
    finally:
        reset_settings()


def test_eval_quantum_is_linear():
    """hom(O2) - hom(K2) counts ordered non-adjacent pairs, loops included"""
    g = generate(GraphFamily.ER, seed=8, n=9, p=0.5)
    target = WeightedGraph.from_graph(g)
    o2 = KLabeledGraph(Multigraph(2, ()), (0, 1))
    k2 = KLabeledGraph(Multigraph(2, ((0, 1),)), (0, 1))
    x = QuantumGraph.of(o2) - QuantumGraph.of(k2)
    value = eval_quantum(lambda f: hom_weighted(f, target), x)
    assert np.isclose(value, 81 - 2 * g.num_edges)
    assert eval_quantum(lambda f: hom_weighted(f, target), x - x) == 0


def test_closed_walks_stay_exact():
    """trace(A^k) of K_n is (n-1)^k + (n-1)(-1)^k, past float precision too"""
    for n, k in ((30, 12), (40, 13)):
        complete = SimpleGraph.from_edges(n, itertools.combinations(range(n), 2))
        assert closed_walks(complete, k) == (n - 1) ** k + (n - 1) * (-1) ** k
    print("✅ Closed walk counts are exact integers")


def test_distinct_tuples_have_no_repeats():
    rng = np.random.default_rng(0)
    for n, k in ((1009, 3), (200, 100), (1009, 504)):
        rows = distinct_tuples(rng, n, k, 20)
        assert rows.shape == (20, k)
        assert all(len(set(row.tolist())) == k for row in rows)
        assert rows.min() >= 0 and rows.max() < n


if __name__ == "__main__":
    print("🚀 Homomorphism counting tests")
    print("=" * 60)
    test_small_counts()
    test_edge_density_formula()
    test_densities_need_room()
    test_injective_gap()
    test_inclusion_exclusion_transform()
    test_weighted_targets_and_multigraphs()
    test_sparse_densities()
    test_degree_constrained_and_automorphisms()
    test_cycle_spectrum()
    test_fast_hom_agrees_with_count()
    test_sampled_density_close_to_exact()
    test_work_bound()
    test_eval_quantum_is_linear()
    test_closed_walks_stay_exact()
    test_distinct_tuples_have_no_repeats()
    print("\n🎉 Homomorphism counting tests complete!")
