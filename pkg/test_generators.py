#!/usr/bin/env python3
"""
Test graph generators: determinism, parameter validation and the
structural facts of the deterministic families
"""

import numpy as np

from limitforge.utils.errors import InvalidGraphError, UnknownNameError
from limitforge.utils.generators import generate
from limitforge.utils.state import GraphFamily


def test_seeded_families_are_reproducible():
    """Same seed, same graph; different seed, (almost surely) different graph"""
    print("🧪 Testing generator determinism")
    for family, params in ((GraphFamily.ER, {"n": 40, "p": 0.3}),
                           (GraphFamily.UNIFORM_ATTACHMENT, {"n": 40}),
                           (GraphFamily.PREFIX_ATTACHMENT, {"n": 40}),
                           (GraphFamily.PLANTED_PARTITION, {"sizes": [20, 20], "p_in": 0.8, "p_out": 0.1})):
        a = generate(family, seed=11, **params)
        b = generate(family, seed=11, **params)
        c = generate(family, seed=12, **params)
        assert a == b, family
        assert a != c, family
        print(f"✅ {family.value} reproducible")


def test_stochastic_family_needs_seed():
    try:
        generate(GraphFamily.ER, n=5, p=0.5)
    except InvalidGraphError as e:
        print(f"✅ {e}")
    else:
        raise AssertionError("ER without a seed must be refused")


def test_unknown_family_and_bad_parameters():
    for call in (lambda: generate("not-a-family", n=3),
                 lambda: generate(GraphFamily.PALEY, p=15),
                 lambda: generate(GraphFamily.CYCLE, n=2),
                 lambda: generate(GraphFamily.TURAN, n=5)):
        try:
            call()
        except (UnknownNameError, InvalidGraphError) as e:
            print(f"✅ Rejected: {e}")
        else:
            raise AssertionError("call should have been rejected")


def test_paley_is_strongly_regular():
    """Paley(13): 6-regular, adjacent pairs share 2 neighbours, others 3"""
    g = generate(GraphFamily.PALEY, p=13)
    assert g.n == 13
    assert set(g.degrees.tolist()) == {6}
    codegree = g.adjacency_float @ g.adjacency_float
    off = ~np.eye(13, dtype=bool)
    assert set(codegree[g.adj].astype(int).tolist()) == {2}
    assert set(codegree[off & ~g.adj].astype(int).tolist()) == {3}


def test_deterministic_families():
    turan = generate(GraphFamily.TURAN, n=7, r=3)
    assert turan.num_edges == 7 * 6 // 2 - (3 + 1 + 1)
    th = generate(GraphFamily.THRESHOLD, n=6)
    # i ~ j iff i + j <= 6 with 1-based indices
    assert th.adj[0, 4] and not th.adj[0, 5] and not th.adj[2, 3]
    assert generate(GraphFamily.GRID, n=3).num_edges == 12
    assert generate(GraphFamily.PETERSEN).num_edges == 15
    assert generate(GraphFamily.COMPLETE_BIPARTITE, a=2, b=3).num_edges == 6
    assert generate(GraphFamily.STAR, n=4).n == 5
    assert generate(GraphFamily.EMPTY, n=4).num_edges == 0


def test_uniform_attachment_edge_density():
    """Expected edge count is (n^2 - 1) / 6"""
    n = 600
    counts = [generate(GraphFamily.UNIFORM_ATTACHMENT, seed=s, n=n).num_edges for s in range(5)]
    expected = (n * n - 1) / 6
    assert abs(np.mean(counts) - expected) / expected < 0.02


def test_random_bounded_degree():
    for seed in range(10):
        g = generate(GraphFamily.RANDOM_BOUNDED_DEGREE, seed=seed, n=12, d=3)
        assert g.max_degree() <= 3


if __name__ == "__main__":
    print("🚀 Generator tests")
    print("=" * 60)
    test_seeded_families_are_reproducible()
    test_stochastic_family_needs_seed()
    test_unknown_family_and_bad_parameters()
    test_paley_is_strongly_regular()
    test_deterministic_families()
    test_uniform_attachment_edge_density()
    test_random_bounded_degree()
    print("\n🎉 Generator tests complete!")
