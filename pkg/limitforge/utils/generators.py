"""
Graph generators: random models, growth processes and the deterministic
families used as test beds. Growth models number nodes 0..n-1 in birth order.
"""

import logging
from typing import Any, Callable, Dict, Optional, Sequence

import networkx as nx
import numpy as np

from limitforge.utils.errors import InvalidGraphError, UnknownNameError
from limitforge.utils.graph_core import SimpleGraph
from limitforge.utils.state import GraphFamily

logger = logging.getLogger(__name__)

STOCHASTIC_FAMILIES = {
    GraphFamily.ER,
    GraphFamily.UNIFORM_ATTACHMENT,
    GraphFamily.PREFIX_ATTACHMENT,
    GraphFamily.PLANTED_PARTITION,
    GraphFamily.TWO_CLIQUES,
    GraphFamily.RANDOM_BOUNDED_DEGREE,
}


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidGraphError(message)


def _upper_pairs(n: int):
    return np.triu_indices(n, 1)


def _symmetric_from_upper(n: int, mask: np.ndarray) -> SimpleGraph:
    adj = np.zeros((n, n), dtype=bool)
    iu = _upper_pairs(n)
    adj[iu] = mask
    return SimpleGraph(adj | adj.T)


def erdos_renyi(n: int, p: float, seed: int) -> SimpleGraph:
    _require(n >= 0, f"n must be nonnegative, got {n}")
    _require(0.0 <= p <= 1.0, f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    return _symmetric_from_upper(n, rng.random(n * (n - 1) // 2) < p)


def turan(n: int, r: int) -> SimpleGraph:
    """Complete r-partite graph with contiguous, equitable classes."""
    _require(n >= 0 and r >= 1, f"need n >= 0 and r >= 1, got n={n}, r={r}")
    sizes = [n // r + (1 if i < n % r else 0) for i in range(r)]
    classes = np.repeat(np.arange(r), sizes)
    return SimpleGraph(classes[:, None] != classes[None, :])


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    for d in range(2, int(p ** 0.5) + 1):
        if p % d == 0:
            return False
    return True


def paley(p: int) -> SimpleGraph:
    """Nodes are residues mod p; u ~ v iff u - v is a nonzero square."""
    _require(_is_prime(p) and p % 4 == 1, f"Paley graphs need a prime p = 1 mod 4, got {p}")
    squares = np.zeros(p, dtype=bool)
    squares[(np.arange(1, p) ** 2) % p] = True
    diff = (np.arange(p)[:, None] - np.arange(p)[None, :]) % p
    return SimpleGraph(squares[diff])


def threshold(n: int) -> SimpleGraph:
    """Nodes 0..n-1; u ~ v (u != v) iff (u + 1) + (v + 1) <= n."""
    _require(n >= 0, f"n must be nonnegative, got {n}")
    idx = np.arange(1, n + 1)
    adj = (idx[:, None] + idx[None, :]) <= n
    np.fill_diagonal(adj, False)
    return SimpleGraph(adj)


def uniform_attachment(n: int, seed: int) -> SimpleGraph:
    """Graph after n steps of the uniform attachment process.

    At step m a node is born and every nonadjacent pair joins with probability
    1/m, so i < j end up nonadjacent with probability j/n, independently over
    pairs. Each pair carries one uniform U_ij and is an edge iff U_ij >= j/n,
    which is the same growth run observed at time n.
    """
    _require(n >= 1, f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    iu = _upper_pairs(n)
    u = rng.random(iu[0].size)
    return _symmetric_from_upper(n, u >= iu[1] / n)


def prefix_attachment(n: int, seed: int) -> SimpleGraph:
    """Node v (birth order) picks z uniform in 1..v+1 and joins nodes 0..z-2."""
    _require(n >= 1, f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    z = rng.integers(1, np.arange(1, n + 1) + 1)
    cols = np.arange(n)
    lower = cols[None, :] < (z[:, None] - 1)
    adj = lower | lower.T
    np.fill_diagonal(adj, False)
    return SimpleGraph(adj)


def grid(n: int) -> SimpleGraph:
    """n x n grid; node i*n + j is cell (i, j)."""
    _require(n >= 1, f"grid side must be positive, got {n}")
    return SimpleGraph.from_networkx(nx.grid_2d_graph(n, n))


def complete_bipartite(a: int, b: int) -> SimpleGraph:
    side = np.array([0] * a + [1] * b)
    return SimpleGraph(side[:, None] != side[None, :])


def cycle(n: int) -> SimpleGraph:
    _require(n >= 3, f"cycles need at least 3 nodes, got {n}")
    return SimpleGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> SimpleGraph:
    _require(n >= 1, f"paths need at least 1 node, got {n}")
    return SimpleGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves: int) -> SimpleGraph:
    return SimpleGraph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def petersen() -> SimpleGraph:
    return SimpleGraph.from_networkx(nx.petersen_graph())


def planted_partition(sizes: Sequence[int], p_in: float, p_out: float, seed: int) -> SimpleGraph:
    """Blocks of the given sizes (contiguous); edge probability p_in inside, p_out across."""
    _require(all(s >= 1 for s in sizes), f"block sizes must be positive, got {list(sizes)}")
    _require(0 <= p_in <= 1 and 0 <= p_out <= 1, "probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    classes = np.repeat(np.arange(len(sizes)), sizes)
    n = classes.size
    iu = _upper_pairs(n)
    prob = np.where(classes[iu[0]] == classes[iu[1]], p_in, p_out)
    return _symmetric_from_upper(n, rng.random(prob.size) < prob)


def two_cliques(n: int, p_cross: float = 0.0, seed: int = 0) -> SimpleGraph:
    """Two cliques on the first ceil(n/2) and last floor(n/2) nodes, plus random cross edges."""
    _require(n >= 2, f"need at least 2 nodes, got {n}")
    return planted_partition([n - n // 2, n // 2], 1.0, p_cross, seed)


def random_bounded_degree(n: int, d: int, seed: int, p: float = 0.6) -> SimpleGraph:
    """Random graph with max degree d: pairs in random order, each kept with probability p if degrees allow."""
    _require(n >= 1 and d >= 0, f"need n >= 1 and d >= 0, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    iu = _upper_pairs(n)
    order = rng.permutation(iu[0].size)
    keep = rng.random(iu[0].size) < p
    deg = np.zeros(n, dtype=np.int64)
    adj = np.zeros((n, n), dtype=bool)
    for idx in order:
        if not keep[idx]:
            continue
        u, v = iu[0][idx], iu[1][idx]
        if deg[u] < d and deg[v] < d:
            adj[u, v] = adj[v, u] = True
            deg[u] += 1
            deg[v] += 1
    return SimpleGraph(adj)


_BUILDERS: Dict[GraphFamily, Callable[..., SimpleGraph]] = {
    GraphFamily.ER: lambda seed, n, p: erdos_renyi(int(n), float(p), seed),
    GraphFamily.TURAN: lambda seed, n, r: turan(int(n), int(r)),
    GraphFamily.PALEY: lambda seed, p: paley(int(p)),
    GraphFamily.THRESHOLD: lambda seed, n: threshold(int(n)),
    GraphFamily.UNIFORM_ATTACHMENT: lambda seed, n: uniform_attachment(int(n), seed),
    GraphFamily.PREFIX_ATTACHMENT: lambda seed, n: prefix_attachment(int(n), seed),
    GraphFamily.GRID: lambda seed, n: grid(int(n)),
    GraphFamily.COMPLETE: lambda seed, n: SimpleGraph.complete(int(n)),
    GraphFamily.EMPTY: lambda seed, n: SimpleGraph.empty(int(n)),
    GraphFamily.CYCLE: lambda seed, n: cycle(int(n)),
    GraphFamily.PATH: lambda seed, n: path(int(n)),
    GraphFamily.STAR: lambda seed, n: star(int(n)),
    GraphFamily.COMPLETE_BIPARTITE: lambda seed, a, b=None: complete_bipartite(int(a), int(a if b is None else b)),
    GraphFamily.PETERSEN: lambda seed: petersen(),
    GraphFamily.TWO_CLIQUES: lambda seed, n, p=0.0: two_cliques(int(n), float(p), seed),
    GraphFamily.PLANTED_PARTITION: lambda seed, sizes, p_in, p_out: planted_partition(
        [int(s) for s in sizes], float(p_in), float(p_out), seed),
    GraphFamily.RANDOM_BOUNDED_DEGREE: lambda seed, n, d, p=0.6: random_bounded_degree(int(n), int(d), seed, float(p)),
}


def generate(family: GraphFamily, seed: Optional[int] = None, **params: Any) -> SimpleGraph:
    """Build a graph of the given family.

    Args:
        family: which family (GraphFamily or its string value)
        seed: required for stochastic families
        params: family parameters (n, p, r, a, b, d, sizes, p_in, p_out)

    Returns:
        the generated SimpleGraph; identical for identical arguments
    """
    if isinstance(family, str):
        try:
            family = GraphFamily(family)
        except ValueError as e:
            raise UnknownNameError(f"unknown graph family '{family}'") from e
    if family in STOCHASTIC_FAMILIES and seed is None:
        raise InvalidGraphError(f"family '{family.value}' is random and needs a seed")
    try:
        graph = _BUILDERS[family](seed, **params)
    except TypeError as e:
        raise InvalidGraphError(f"bad parameters for family '{family.value}': {e}") from e
    logger.debug(f"Generated {family.value} graph with {graph.n} nodes and {graph.num_edges} edges")
    return graph
