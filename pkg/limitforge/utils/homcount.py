"""
Homomorphism counting.

hom counts go through a tensor contraction (one adjacency factor per edge of
F); injective and induced counts use backtracking over a greedy node order
with numpy candidate masks. All counts are exact integers.
"""

import logging
from fractions import Fraction
from math import comb, perm
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigvalsh

from limitforge.utils.config import get_settings
from limitforge.utils.errors import DomainError, InvalidGraphError, SizeBoundExceeded
from limitforge.utils.graph_core import (
    GraphLike,
    Multigraph,
    QuantumGraph,
    SimpleGraph,
    WeightedGraph,
    as_multigraph,
    as_simple,
    unlabel,
)
from limitforge.utils.state import CountKind, DensityKind, SparseKind, TransformDirection

logger = logging.getLogger(__name__)

PERMUTATION_CELLS = 20_000_000


def _check_work(requested: float, what: str) -> None:
    limit = get_settings().hom_work_bound
    if requested > limit:
        raise SizeBoundExceeded("hom_work_bound", limit, requested, what)


def _contract(f: Multigraph, node_weights: np.ndarray, edge_matrix: np.ndarray) -> Any:
    """Sum over maps V(F) -> [q] of prod node_weights * prod edge_matrix^multiplicity."""
    if f.n == 0:
        return edge_matrix.dtype.type(1)
    operands: List[Any] = []
    for u in range(f.n):
        operands.extend([node_weights, [u]])
    for (u, v), mult in sorted(f.edge_counter().items()):
        if u == v:
            operands.extend([np.diagonal(edge_matrix) ** mult, [u]])
        else:
            operands.extend([edge_matrix ** mult, [u, v]])
    return np.einsum(*operands, [], optimize=True)


def _search_order(f_adj: np.ndarray, first: Sequence[int]) -> List[int]:
    k = f_adj.shape[0]
    order = list(first)
    placed = set(order)
    degree = f_adj.sum(axis=1)
    while len(order) < k:
        best = max((v for v in range(k) if v not in placed),
                   key=lambda v: (sum(f_adj[v, u] for u in order), degree[v], -v))
        order.append(best)
        placed.add(best)
    return order


def _embed_count(
    f_adj: np.ndarray,
    g_adj: np.ndarray,
    induced: bool,
    pinned: Optional[Mapping[int, int]] = None,
    allowed: Optional[Mapping[int, np.ndarray]] = None,
    stop_at: Optional[int] = None,
) -> int:
    """Injective (optionally induced) maps F -> G with pinned images and per-node candidate masks."""
    k, n = f_adj.shape[0], g_adj.shape[0]
    if k == 0:
        return 1
    if k > n:
        return 0
    pinned = dict(pinned or {})
    order = _search_order(f_adj, sorted(pinned))
    position = {v: i for i, v in enumerate(order)}
    back_adj = [[position[u] for u in order[:i] if f_adj[v, u]] for i, v in enumerate(order)]
    back_non = [[position[u] for u in order[:i] if not f_adj[v, u]] for i, v in enumerate(order)]
    base = []
    for v in order:
        mask = np.ones(n, dtype=bool)
        if allowed is not None and v in allowed:
            mask &= allowed[v]
        if v in pinned:
            single = np.zeros(n, dtype=bool)
            single[pinned[v]] = True
            mask &= single
        base.append(mask)
    non_adj = ~g_adj
    images = [0] * k
    used = np.zeros(n, dtype=bool)

    def extend(i: int) -> int:
        mask = base[i] & ~used
        for j in back_adj[i]:
            mask &= g_adj[images[j]]
        if induced:
            for j in back_non[i]:
                mask &= non_adj[images[j]]
        if i == k - 1:
            return int(mask.sum())
        total = 0
        for w in np.flatnonzero(mask):
            images[i] = w
            used[w] = True
            total += extend(i + 1)
            used[w] = False
            if stop_at is not None and total >= stop_at:
                break
        return total

    return extend(0)


def count(kind: CountKind, f: GraphLike, g: GraphLike) -> int:
    """Exact hom / inj / ind count of F into G.

    Args:
        kind: CountKind.HOM, INJ or IND
        f: pattern graph
        g: target graph

    Returns:
        nonnegative integer count
    """
    kind = CountKind(kind)
    fs, gs = as_simple(f), as_simple(g)
    k, n = fs.n, gs.n
    if kind is CountKind.HOM:
        _check_work(float(n) ** k, f"hom count of a {k}-node graph into {n} nodes")
        value = _contract(fs.as_multigraph(), np.ones(n, dtype=np.int64), gs.adj.astype(np.int64))
        return int(value)
    _check_work(float(perm(n, k)) if k <= n else 0.0, f"{kind.value} count of a {k}-node graph into {n} nodes")
    return _embed_count(fs.adj, gs.adj, induced=kind is CountKind.IND)


def density(kind: DensityKind, f: GraphLike, g: GraphLike) -> float:
    """t = hom/n^k, t_inj = inj/(n)_k, t_ind = ind/(n)_k."""
    return float(density_exact(kind, f, g))


def density_exact(kind: DensityKind, f: GraphLike, g: GraphLike) -> Fraction:
    kind = DensityKind(kind)
    k, n = as_simple(f).n, as_simple(g).n
    if kind is DensityKind.T:
        if n == 0:
            raise DomainError("homomorphism density into the empty graph is undefined")
        return Fraction(count(CountKind.HOM, f, g), n ** k)
    if n < k:
        raise DomainError(f"{kind.value} needs |V(G)| >= |V(F)|, got {n} < {k}")
    counted = CountKind.INJ if kind is DensityKind.T_INJ else CountKind.IND
    return Fraction(count(counted, f, g), perm(n, k))


def injective_gap_bound(f: GraphLike, g: GraphLike) -> float:
    """Union bound: |t_inj(F,G) - t(F,G)| <= C(k,2)/n (non-injective maps are at most that fraction)."""
    return comb(as_simple(f).n, 2) / as_simple(g).n


# ---------------------------------------------------------------------------
# inclusion-exclusion over labeled supergraphs
# ---------------------------------------------------------------------------

MAX_TRANSFORM_NODES = 5


def missing_pairs(f: GraphLike) -> List[Tuple[int, int]]:
    fs = as_simple(f)
    return [(u, v) for u in range(fs.n) for v in range(u + 1, fs.n) if not fs.adj[u, v]]


def supergraphs(f: GraphLike) -> List[SimpleGraph]:
    """Labeled supergraphs of F on V(F); entry `mask` adds the missing pairs whose bits are set."""
    fs = as_simple(f)
    if fs.n > MAX_TRANSFORM_NODES:
        raise SizeBoundExceeded("transform_nodes", MAX_TRANSFORM_NODES, fs.n)
    pairs = missing_pairs(fs)
    out = []
    for mask in range(1 << len(pairs)):
        adj = np.array(fs.adj)
        for bit, (u, v) in enumerate(pairs):
            if mask >> bit & 1:
                adj[u, v] = adj[v, u] = True
        out.append(SimpleGraph(adj))
    return out


def transform(direction: TransformDirection, values: Sequence[float], f: GraphLike) -> np.ndarray:
    """Move between t_inj and t_ind vectors indexed by the supergraph lattice of F.

    inj_from_ind: t_inj(F') = sum over F'' >= F' of t_ind(F'')
    ind_from_inj: t_ind(F') = sum over F'' >= F' of (-1)^{|E(F'') - E(F')|} t_inj(F'')
    """
    direction = TransformDirection(direction)
    pairs = missing_pairs(f)
    if as_simple(f).n > MAX_TRANSFORM_NODES:
        raise SizeBoundExceeded("transform_nodes", MAX_TRANSFORM_NODES, as_simple(f).n)
    out = np.array(values, dtype=float)
    size = 1 << len(pairs)
    if out.shape != (size,):
        raise DomainError(f"supergraph vector must have {size} entries, got shape {out.shape}")
    sign = 1.0 if direction is TransformDirection.INJ_FROM_IND else -1.0
    for bit in range(len(pairs)):
        step = 1 << bit
        for mask in range(size):
            if not mask & step:
                out[mask] += sign * out[mask | step]
    return out


# ---------------------------------------------------------------------------
# weighted targets and sparse densities
# ---------------------------------------------------------------------------

def hom_weighted(f: GraphLike, h: WeightedGraph) -> float:
    """sum over maps phi of prod alpha_phi(u) * prod beta_phi(u)phi(v)^multiplicity."""
    mg = as_multigraph(f)
    _check_work(float(h.n) ** mg.n, f"weighted hom of a {mg.n}-node graph into {h.n} nodes")
    return float(_contract(mg, h.alpha, h.beta))


def s_density(kind: SparseKind, f: GraphLike, g: GraphLike) -> float:
    """Count of F in G divided by |V(G)|; F must be connected."""
    kind = SparseKind(kind)
    if not as_multigraph(f).is_connected():
        raise DomainError("sparse densities are defined for connected F only")
    counted = {SparseKind.S: CountKind.HOM, SparseKind.S_INJ: CountKind.INJ, SparseKind.S_IND: CountKind.IND}[kind]
    n = as_simple(g).n
    if n == 0:
        raise DomainError("sparse density into the empty graph is undefined")
    return count(counted, f, g) / n


def ind_deg(f: GraphLike, degrees: Union[Mapping[int, int], Sequence[Optional[int]]], g: GraphLike,
            max_degree: Optional[int] = None, pinned: Optional[Mapping[int, int]] = None) -> int:
    """Induced embeddings of F in G where F-node v lands on a G-node of degree degrees[v].

    Nodes missing from the mapping (or given as None) are unconstrained.
    """
    fs, gs = as_simple(f), as_simple(g)
    if max_degree is not None and gs.max_degree() > max_degree:
        raise InvalidGraphError(f"target has max degree {gs.max_degree()} > {max_degree}")
    if not isinstance(degrees, Mapping):
        degrees = {v: d for v, d in enumerate(degrees) if d is not None}
    allowed = {v: gs.degrees == d for v, d in degrees.items()}
    return _embed_count(fs.adj, gs.adj, induced=True, pinned=pinned, allowed=allowed)


def exists_induced(f: GraphLike, g: GraphLike, pinned: Optional[Mapping[int, int]] = None,
                   degrees: Optional[Mapping[int, int]] = None) -> bool:
    fs, gs = as_simple(f), as_simple(g)
    allowed = {v: gs.degrees == d for v, d in (degrees or {}).items()}
    return _embed_count(fs.adj, gs.adj, induced=True, pinned=pinned, allowed=allowed, stop_at=1) > 0


def rooted_automorphisms(f: GraphLike, root: Optional[int] = None) -> int:
    """Automorphisms of F (fixing the root when given)."""
    fs = as_simple(f)
    pinned = {root: root} if root is not None else None
    return _embed_count(fs.adj, fs.adj, induced=True, pinned=pinned)


# ---------------------------------------------------------------------------
# spectra and closed-form counts for large targets
# ---------------------------------------------------------------------------

def closed_walks(g: GraphLike, k: int) -> int:
    """hom(C_k, G) = number of closed walks of length k."""
    gs = as_simple(g)
    walks_bound = gs.n ** k
    if walks_bound <= 2 ** 53:
        return int(round(float(np.trace(np.linalg.matrix_power(gs.adjacency_float, k)))))
    dtype = np.int64 if walks_bound < 2 ** 63 else object
    power = np.linalg.matrix_power(gs.adj.astype(np.int64).astype(dtype), k)
    return int(sum(int(power[i, i]) for i in range(gs.n)))


def cycle_spectrum(g: GraphLike, k: int) -> Dict[str, float]:
    """hom(C_k, G) next to the eigenvalue power sum."""
    gs = as_simple(g)
    if k < 3:
        raise DomainError(f"cycles need k >= 3, got {k}")
    if gs.n > 2000:
        raise SizeBoundExceeded("spectrum_nodes", 2000, gs.n)
    try:
        eigenvalues = eigvalsh(gs.adjacency_float)
    except np.linalg.LinAlgError as e:
        raise DomainError(f"eigenvalue computation failed: {e}") from e
    spectral = float(np.sum(eigenvalues ** k))
    hom = closed_walks(gs, k)
    relative = abs(hom - spectral) / max(1.0, float(hom))
    return {"hom": hom, "spectral": spectral, "relative_difference": relative}


def _path_homs(a: np.ndarray, nodes: int) -> float:
    vec = np.ones(a.shape[0])
    for _ in range(nodes - 1):
        vec = a @ vec
    return float(vec.sum())


def fast_hom(f: GraphLike, g: GraphLike) -> float:
    """hom(F, G) through matrix formulas for K1, K2, paths, stars and cycles; falls back to count()."""
    fs, gs = as_simple(f), as_simple(g)
    a = gs.adjacency_float
    k = fs.n
    degrees = fs.degrees
    if fs.is_connected():
        if fs.num_edges == k - 1 and k >= 1:
            if k <= 2 or sorted(degrees.tolist()) == [1, 1] + [2] * (k - 2):
                return _path_homs(a, k)
            if sorted(degrees.tolist()) == [1] * (k - 1) + [k - 1]:
                return float(np.sum(gs.degrees.astype(float) ** (k - 1)))
        if k >= 3 and fs.num_edges == k and (degrees == 2).all():
            if k == 3:
                return float(np.sum((a @ a) * a))
            if k == 4:
                a2 = a @ a
                return float(np.sum(a2 * a2))
            return float(closed_walks(gs, k))
    return float(count(CountKind.HOM, fs, gs))


def fast_density(f: GraphLike, g: GraphLike) -> float:
    fs, gs = as_simple(f), as_simple(g)
    return fast_hom(fs, gs) / float(gs.n) ** fs.n


def sampled_density(kind: DensityKind, f: GraphLike, g: GraphLike, samples: int, seed: int) -> Tuple[float, float]:
    """Monte Carlo t / t_ind on large targets: mean and standard error over random node tuples."""
    kind = DensityKind(kind)
    fs, gs = as_simple(f), as_simple(g)
    rng = np.random.default_rng(seed)
    k, n = fs.n, gs.n
    if kind is DensityKind.T:
        nodes = rng.integers(0, n, size=(samples, k))
    else:
        nodes = distinct_tuples(rng, n, k, samples)
    ok = np.ones(samples, dtype=bool)
    for u in range(k):
        for v in range(u + 1, k):
            hit = gs.adj[nodes[:, u], nodes[:, v]]
            if fs.adj[u, v]:
                ok &= hit
            elif kind is DensityKind.T_IND:
                ok &= ~hit
    values = ok.astype(float)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0


def distinct_tuples(rng: np.random.Generator, n: int, k: int, samples: int) -> np.ndarray:
    """samples x k array of uniform k-subsets of range(n), each row in random order."""
    if k * k <= n:
        nodes = rng.integers(0, n, size=(samples, k))
        for _ in range(64):
            bad = (np.diff(np.sort(nodes, axis=1), axis=1) == 0).any(axis=1)
            if not bad.any():
                return nodes
            nodes[bad] = rng.integers(0, n, size=(int(bad.sum()), k))
    if samples * n <= PERMUTATION_CELLS:
        return rng.permuted(np.tile(np.arange(n), (samples, 1)), axis=1)[:, :k]
    return np.stack([rng.choice(n, k, replace=False) for _ in range(samples)])


def eval_quantum(parameter: Callable[[Multigraph], Any], x: QuantumGraph, drop_isolated: bool = False) -> Any:
    """Linear extension of a graph parameter: sum of coefficient * f(unlabeled term)."""
    total: Any = 0
    for graph, coefficient in x.graphs():
        total += coefficient * parameter(unlabel(graph, drop_isolated))
    return total
