#!/usr/bin/env python3
"""
Test cut norms and the cut-type distances
"""

import numpy as np

from limitforge.utils.cutmetric import (
    FractionalOverlay,
    StepKernel,
    counting_lemma_lower,
    cut_norm,
    cut_norm_upper,
    d_cut_aligned,
    d_sample,
    delta_cut,
    delta_hat,
)
from limitforge.utils.errors import DomainError, InvalidGraphError, SizeBoundExceeded
from limitforge.utils.generators import generate
from limitforge.utils.graph_core import SimpleGraph, blow_up, named_graph
from limitforge.utils.state import GraphFamily, Mode


def test_cut_norm_small_kernels():
    """Hand-computed cut norms"""
    print("🧪 Testing cut norms")
    constant = StepKernel(np.array([0.25, 0.75]), np.full((2, 2), -0.4))
    assert np.isclose(cut_norm(constant).value, 0.4)
    edge = StepKernel.graph_difference(named_graph("K2"), SimpleGraph.empty(2))
    result = cut_norm(edge)
    assert np.isclose(result.value, 0.5)
    assert result.exact and not result.is_lower_bound
    # +1 / -1 checkerboard: the best rectangle is a single block
    D = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert np.isclose(cut_norm(StepKernel(np.array([0.5, 0.5]), D)).value, 0.25)
    print("✅ Exact values match")


def test_heuristic_is_bracketed():
    """Heuristic value <= exact value <= certified upper bound"""
    g = generate(GraphFamily.ER, seed=1, n=14, p=0.5)
    h = generate(GraphFamily.ER, seed=2, n=14, p=0.5)
    kernel = StepKernel.graph_difference(g, h)
    exact = cut_norm(kernel, Mode.EXACT).value
    heuristic = cut_norm(kernel, Mode.HEURISTIC, seed=3)
    assert heuristic.is_lower_bound
    assert heuristic.value <= exact + 1e-12
    assert exact <= cut_norm_upper(kernel) + 1e-12
    assert heuristic.upper is not None and exact <= heuristic.upper + 1e-12


def test_exact_size_bound():
    g = generate(GraphFamily.ER, seed=1, n=30, p=0.5)
    kernel = StepKernel.graph_difference(g, SimpleGraph.empty(30))
    try:
        cut_norm(kernel, Mode.EXACT)
    except SizeBoundExceeded as e:
        assert e.bound == "cut_norm_exact_max"
        print(f"✅ {e}")
    else:
        raise AssertionError("30 blocks exceed the exact cut norm bound")
    auto = d_cut_aligned(g, SimpleGraph.empty(30))
    assert not auto.exact


def test_kernel_validation():
    for p, D in (([0.5, 0.6], np.zeros((2, 2))), ([0.5, 0.5], np.array([[0.0, 1.0], [0.0, 0.0]]))):
        try:
            StepKernel(np.array(p), D)
        except InvalidGraphError:
            pass
        else:
            raise AssertionError("invalid kernel accepted")
    try:
        StepKernel.graph_difference(named_graph("K3"), named_graph("K2"))
    except DomainError:
        print("✅ Unequal sizes rejected for aligned distance")
    else:
        raise AssertionError("aligned distance needs equal node counts")


def test_delta_hat_finds_isomorphism():
    """A relabelled copy is at distance 0 once aligned"""
    print("🧪 Testing delta-hat")
    g = named_graph("paw")
    h = g.relabel([3, 1, 0, 2])
    assert d_cut_aligned(g, h).value > 0
    exact = delta_hat(g, h, Mode.EXACT)
    assert exact.exact and np.isclose(exact.value, 0.0)
    big = generate(GraphFamily.ER, seed=6, n=12, p=0.5)
    try:
        delta_hat(big, big, Mode.EXACT)
    except SizeBoundExceeded:
        print("✅ Exact delta-hat bounded")
    else:
        raise AssertionError("12 nodes exceed delta_hat_exact_max")
    heuristic = delta_hat(big, big.relabel(list(range(11, -1, -1))), Mode.HEURISTIC, seed=1)
    assert heuristic.value >= 0.0 and not heuristic.exact


def test_delta_cut_bracket():
    """Blow-ups are at distance 0; K3 and its complement bracket at 2/3"""
    bracket = delta_cut(named_graph("K2"), blow_up(named_graph("K2"), 2))
    assert bracket.lower <= bracket.upper
    assert np.isclose(bracket.upper, 0.0, atol=1e-12)
    far = delta_cut(named_graph("K3"), SimpleGraph.empty(3))
    assert np.isclose(far.lower, 2 / 3)
    assert np.isclose(far.upper, 2 / 3)
    assert far.lower_witness is not None


def test_counting_lemma_lower_bound():
    g = generate(GraphFamily.ER, seed=3, n=8, p=0.5)
    value, witness = counting_lemma_lower(g, g)
    assert value == 0.0 and witness == "none"


def test_overlay_marginals():
    try:
        FractionalOverlay(np.array([[0.5, 0.0], [0.0, 0.25]]))
    except InvalidGraphError:
        print("✅ Non-uniform marginals rejected")
    else:
        raise AssertionError("overlay marginals must be uniform")
    overlay = FractionalOverlay.from_blowup_alignment(2, 3, list(range(6)))
    assert np.allclose(overlay.X.sum(axis=1), 0.5)
    assert np.allclose(overlay.X.sum(axis=0), 1 / 3)


def test_sampling_distance():
    g = generate(GraphFamily.ER, seed=3, n=9, p=0.5)
    same = d_sample(g, g, kmax=4)
    assert same.value == 0.0 and same.truncation_error == 2.0 ** -4
    apart = d_sample(named_graph("K4"), SimpleGraph.empty(4), kmax=3)
    # k = 1 samples agree; k = 2 and 3 are fully separated
    assert np.isclose(apart.value, 0.25 + 0.125)
    try:
        d_sample(g, g, kmax=20)
    except DomainError:
        pass
    else:
        raise AssertionError("kmax above the node count must fail")


if __name__ == "__main__":
    print("🚀 Cut metric tests")
    print("=" * 60)
    test_cut_norm_small_kernels()
    test_heuristic_is_bracketed()
    test_exact_size_bound()
    test_kernel_validation()
    test_delta_hat_finds_isomorphism()
    test_delta_cut_bracket()
    test_counting_lemma_lower_bound()
    test_overlay_marginals()
    test_sampling_distance()
    print("\n🎉 Cut metric tests complete!")
