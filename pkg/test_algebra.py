#!/usr/bin/env python3
"""
Test graph algebras: connection matrices, induced idempotents, perfect
matchings, square-sum certificates and the inequality battery
"""

import numpy as np

from limitforge.utils.algebra import (
    certificate_to_json,
    check_nonnegative,
    connection_submatrix,
    goodman_certificate,
    goodman_target,
    hat,
    inequality_battery,
    kernel_test,
    labeled_basis,
    labeled_path,
    load_certificate,
    perfect_matchings,
    psd_rank_check,
    square_sum_unlabel,
    unlabeled_quantum,
    verify_certificate,
)
from limitforge.utils.errors import DomainError, InvalidGraphError
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import KLabeledGraph, Multigraph, QuantumGraph, WeightedGraph, named_graph
from limitforge.utils.homcount import hom_weighted
from limitforge.utils.state import GraphFamily


def hom_into_triangle(f: Multigraph) -> float:
    return hom_weighted(f, WeightedGraph.from_graph(named_graph("K3")))


def test_perfect_matchings():
    print("🧪 Testing perfect matchings")
    assert perfect_matchings(named_graph("K4")) == 3
    assert perfect_matchings(generate(GraphFamily.CYCLE, n=6)) == 2
    assert perfect_matchings(named_graph("K3")) == 0
    assert perfect_matchings(named_graph("petersen")) == 6
    assert perfect_matchings(Multigraph(2, ((0, 1), (0, 1), (0, 0)), loops_allowed=True)) == 2
    print("✅ Matching counts match")


def test_labeled_basis_sizes():
    """1-labeled graphs on at most 2 nodes: K1, K1 + K1, K2"""
    assert len(labeled_basis(1, 2)) == 3
    assert all(graph.k == 2 for graph in labeled_basis(2, 3))
    assert labeled_basis(3, 2) == []


def test_connection_matrix_of_hom_is_psd():
    """hom(., K3) has PSD connection matrices of rank at most 3^k"""
    print("🧪 Testing connection matrices")
    basis = labeled_basis(2, 3)
    sub = connection_submatrix(hom_into_triangle, 2, basis)
    report = psd_rank_check(sub.matrix)
    assert report.is_psd
    assert report.rank <= 9
    assert sub.size == len(basis)
    print(f"✅ {sub.size}x{sub.size} submatrix, rank {report.rank}")


def test_psd_check_detects_negative_eigenvalue():
    report = psd_rank_check(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not report.is_psd and report.rank == 1
    assert np.isclose(report.min_eigenvalue, -1.0)
    assert psd_rank_check(np.zeros((0, 0))).rank == 0


def test_hat_expansion():
    """hat of two labeled non-adjacent nodes is O2 - K2"""
    empty = KLabeledGraph(Multigraph(2, ()), (0, 1))
    edge = KLabeledGraph(Multigraph(2, ((0, 1),)), (0, 1))
    assert hat(empty) == QuantumGraph.of(empty) - QuantumGraph.of(edge)
    assert hat(edge) == QuantumGraph.of(edge)
    try:
        hat(KLabeledGraph(Multigraph(2, ()), (0,)))
    except DomainError:
        pass
    else:
        raise AssertionError("hat needs every node labeled")


def test_matching_kernel():
    """P4 - P2 with labeled endpoints lies in the kernel of the matching parameter; P3 - P2 does not"""
    basis = labeled_basis(2, 4)
    x = QuantumGraph.of(labeled_path(4)) - QuantumGraph.of(labeled_path(2))
    assert kernel_test(perfect_matchings, x, basis)
    y = QuantumGraph.of(labeled_path(3)) - QuantumGraph.of(labeled_path(2))
    assert not kernel_test(perfect_matchings, y, basis)


def test_goodman_certificate_reduces_exactly():
    print("🧪 Testing the Goodman certificate")
    assert square_sum_unlabel(goodman_certificate()) == goodman_target()
    report = check_nonnegative(goodman_target(), trials=200, seed=2)
    assert report["nonnegative"]
    print(f"✅ Least value over random step graphons: {report['min_value']:.3e}")


def test_certificate_json():
    """Serialised certificates verify; a wrong claim is reported as a mismatch"""
    text = certificate_to_json(goodman_certificate(), claim=goodman_target(), name="goodman")
    result = verify_certificate(load_certificate(text))
    assert result["success"] and result["matches"] is True
    wrong = unlabeled_quantum([(1, named_graph("K3"))])
    bad = verify_certificate(load_certificate(certificate_to_json(goodman_certificate(), claim=wrong)))
    assert not bad["success"] and bad["matches"] is False
    unchecked = verify_certificate(load_certificate(certificate_to_json(goodman_certificate())))
    assert unchecked["success"] and unchecked["matches"] is None
    try:
        load_certificate('{"squares": [{"weight": "-1", "graphs": []}]}')
    except InvalidGraphError:
        print("✅ Negative square weight rejected")
    else:
        raise AssertionError("negative weights must be rejected")


def test_inequality_battery():
    table = inequality_battery(generate(GraphFamily.ER, seed=1, n=12, p=0.5))
    assert not table["violated"].any()
    turan = inequality_battery(generate(GraphFamily.TURAN, n=12, r=3))
    goodman = turan[turan["inequality"] == "goodman"].iloc[0]
    assert abs(goodman["margin"]) < 1e-12
    with_sidorenko = inequality_battery(named_graph("C5"), sidorenko=named_graph("C4"))
    row = with_sidorenko[with_sidorenko["inequality"] == "sidorenko"].iloc[0]
    assert row["report_only"] and row["violated"] is None
    try:
        inequality_battery(named_graph("C5"), sidorenko=named_graph("K3"))
    except DomainError:
        print("✅ Non-bipartite Sidorenko graph rejected")
    else:
        raise AssertionError("Sidorenko row needs a bipartite graph")


if __name__ == "__main__":
    print("🚀 Graph algebra tests")
    print("=" * 60)
    test_perfect_matchings()
    test_labeled_basis_sizes()
    test_connection_matrix_of_hom_is_psd()
    test_psd_check_detects_negative_eigenvalue()
    test_hat_expansion()
    test_matching_kernel()
    test_goodman_certificate_reduces_exactly()
    test_certificate_json()
    test_inequality_battery()
    print("\n🎉 Graph algebra tests complete!")
