#!/usr/bin/env python3
"""
Test graph carriers: validation, labeled products, quantum graphs,
canonical forms and the edge-list / JSON formats
"""

import itertools

import networkx as nx
import numpy as np

from limitforge.utils.errors import InvalidGraphError, LabelMismatchError, SizeBoundExceeded
from limitforge.utils.graph_core import (
    KLabeledGraph,
    Multigraph,
    Partition,
    QuantumGraph,
    SimpleGraph,
    WeightedGraph,
    all_graphs,
    blow_up,
    canonical_form,
    connected_catalog,
    decode_canonical,
    format_edge_list,
    glue,
    induce,
    is_isomorphic,
    named_graph,
    parse_edge_list,
    tensor,
    unlabel,
)


def test_simple_graph_validation():
    """Loops, repeated edges and bad endpoints are rejected"""
    print("🧪 Testing simple graph validation")
    for edges in ([(0, 0)], [(0, 1), (1, 0)], [(0, 5)]):
        try:
            SimpleGraph.from_edges(3, edges)
        except InvalidGraphError as e:
            print(f"✅ Rejected {edges}: {e}")
        else:
            raise AssertionError(f"{edges} should have been rejected")
    g = SimpleGraph.from_edges(4, [(0, 1), (1, 2)])
    assert g.n == 4 and g.num_edges == 2
    assert g.degrees.tolist() == [1, 2, 1, 0]


def test_multigraph_multiplicities():
    """Parallel edges are kept and counted"""
    print("🧪 Testing multigraph multiplicities")
    mg = Multigraph(2, ((0, 1), (1, 0), (0, 1)))
    assert mg.num_edges == 3
    assert mg.multiplicities()[0, 1] == 3
    assert not mg.is_simple
    assert mg.simplify().num_edges == 1
    try:
        mg.as_simple()
    except InvalidGraphError:
        print("✅ as_simple refuses multi-edges")
    else:
        raise AssertionError("as_simple should refuse a multigraph")


def test_canonical_form_matches_networkx():
    """canonical_form agrees with networkx isomorphism on all 4-node graphs"""
    print("🧪 Testing canonical forms against networkx")
    graphs = list(all_graphs(4))
    rng = np.random.default_rng(3)
    for _ in range(60):
        g1, g2 = graphs[rng.integers(len(graphs))], graphs[rng.integers(len(graphs))]
        expected = nx.is_isomorphic(g1.to_networkx(), g2.to_networkx())
        assert is_isomorphic(g1, g2) == expected
    g = named_graph("paw")
    for order in itertools.permutations(range(4)):
        assert canonical_form(g.relabel(order)) == canonical_form(g)
    print("✅ Canonical forms are isomorphism invariant")


def test_canonical_classes_count():
    """There are 11 graphs on 4 nodes up to isomorphism, 6 of them connected"""
    codes = {canonical_form(g) for g in all_graphs(4)}
    assert len(codes) == 11
    assert len([g for g in connected_catalog(4) if g.n == 4]) == 6


def test_rooted_and_labeled_canonical_forms():
    """Roots and labels break symmetry"""
    p3 = named_graph("P3")
    assert canonical_form(p3, root=0) == canonical_form(p3, root=2)
    assert canonical_form(p3, root=0) != canonical_form(p3, root=1)
    center = KLabeledGraph(p3.as_multigraph(), (1,))
    end = KLabeledGraph(p3.as_multigraph(), (0,))
    assert canonical_form(center) != canonical_form(end)
    base, colors = decode_canonical(canonical_form(center))
    assert base.n == 3 and sorted(colors) == [0, 0, 1]


def test_canonical_size_bound():
    """Unrooted canonical forms stop at canonical_max_nodes"""
    try:
        canonical_form(SimpleGraph.empty(11))
    except SizeBoundExceeded as e:
        assert e.bound == "canonical_max_nodes"
        print(f"✅ {e}")
    else:
        raise AssertionError("11 nodes should exceed the default bound")


def test_glue_tensor_unlabel():
    """Gluing two 1-labeled edges at the label gives a path on 3 nodes"""
    print("🧪 Testing labeled products")
    edge = KLabeledGraph(Multigraph(2, ((0, 1),)), (0,))
    product = glue(edge, edge)
    assert product.n == 3 and product.base.num_edges == 2
    assert is_isomorphic(unlabel(product).as_simple(), named_graph("P3"))
    both = KLabeledGraph(Multigraph(2, ((0, 1),)), (0, 1))
    double = glue(both, both)
    assert double.n == 2 and double.base.multiplicities()[0, 1] == 2
    t = tensor(edge, edge)
    assert t.k == 2 and t.n == 4
    try:
        glue(edge, both)
    except LabelMismatchError:
        print("✅ Label mismatch detected")
    else:
        raise AssertionError("gluing 1- and 2-labeled graphs must fail")
    isolated = KLabeledGraph(Multigraph(3, ((0, 1),)), (2,))
    assert unlabel(isolated, drop_isolated=True).n == 2
    assert canonical_form(glue(both, KLabeledGraph.empty_labeled(2))) == canonical_form(both)


def test_quantum_graph_arithmetic():
    """Coefficients stay exact and cancel"""
    edge = KLabeledGraph.unlabeled(named_graph("K2"))
    x = QuantumGraph.of(edge, 2) - QuantumGraph.of(edge, 2)
    assert x.is_zero
    half = QuantumGraph.of(edge).scale(0.5)
    assert half.terms[canonical_form(edge)] == 0.5
    from fractions import Fraction
    third = QuantumGraph.of(edge, Fraction(1, 3))
    assert (third + third + third) == QuantumGraph.of(edge)
    labeled = QuantumGraph.of(KLabeledGraph.fully_labeled(named_graph("K2")))
    squared = labeled.glue(labeled)
    assert squared.max_nodes == 2
    assert squared.simplify() == labeled
    assert labeled.unlabel() == QuantumGraph.of(edge)


def test_blow_up_and_induce():
    g = named_graph("K2")
    big = blow_up(g, 3)
    assert big.n == 6 and big.num_edges == 9
    tri = induce(named_graph("K4"), [0, 2, 3])
    assert tri == named_graph("K3")
    try:
        induce(g, [0, 0])
    except InvalidGraphError:
        pass
    else:
        raise AssertionError("repeated nodes must be rejected")


def test_partition_from_assignment():
    """Empty classes are skipped and blocks keep class order"""
    p = Partition.from_assignment([2, 0, 2, 5])
    assert p.size == 3
    assert p.block_sizes().tolist() == [1, 2, 1]
    assert p.assignment().tolist() == [1, 0, 1, 2]
    try:
        Partition((frozenset([0]), frozenset([0, 1])), 2)
    except InvalidGraphError:
        print("✅ Overlapping blocks rejected")
    else:
        raise AssertionError("overlapping blocks must be rejected")


def test_edge_list_format():
    """Header line "n m", then one edge per line"""
    text = "# triangle with a pendant\n4 4\n0 1\n1 2\n2 0\n2 3\n"
    mg = parse_edge_list(text)
    assert mg.n == 4 and mg.num_edges == 4
    assert format_edge_list(mg).splitlines()[0] == "4 4"
    assert parse_edge_list(format_edge_list(mg)).edges == mg.edges
    try:
        parse_edge_list("3 2\n0 1\n")
    except InvalidGraphError as e:
        print(f"✅ {e}")
    else:
        raise AssertionError("edge count mismatch must be rejected")


def test_weighted_graph_json():
    h = WeightedGraph(np.array([1.0, 2.0]), np.array([[0.0, 0.5], [0.5, 1.0]]))
    assert WeightedGraph.from_json(h.to_json()) == h
    nested = '{"n": 2, "alpha": [1, 1], "beta": [[0, 1], [1, 0]]}'
    assert WeightedGraph.from_json(nested).beta[0, 1] == 1.0
    for bad in ('{"n": 2, "alpha": [1], "beta": [0, 0, 0, 0]}', '{"n": 2, "alpha": [1, 1], "beta": [0, 1, 0, 0]}'):
        try:
            WeightedGraph.from_json(bad)
        except InvalidGraphError:
            pass
        else:
            raise AssertionError(f"{bad} should be rejected")


if __name__ == "__main__":
    print("🚀 Graph core tests")
    print("=" * 60)
    test_simple_graph_validation()
    test_multigraph_multiplicities()
    test_canonical_form_matches_networkx()
    test_canonical_classes_count()
    test_rooted_and_labeled_canonical_forms()
    test_canonical_size_bound()
    test_glue_tensor_unlabel()
    test_quantum_graph_arithmetic()
    test_blow_up_and_induce()
    test_partition_from_assignment()
    test_edge_list_format()
    test_weighted_graph_json()
    print("\n🎉 Graph core tests complete!")
