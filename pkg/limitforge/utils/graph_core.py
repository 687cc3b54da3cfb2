"""
Graph carriers for LimitForge.

Multigraphs (edge multiplicities first class), validated simple graphs,
weighted graphs, k-labeled graphs with gluing and tensor products, quantum
graphs with exact rational coefficients, partitions, blow-ups, induced
subgraphs, canonical forms and the edge-list / JSON formats.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from numbers import Number, Rational
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from limitforge.utils.config import get_settings
from limitforge.utils.errors import InvalidGraphError, LabelMismatchError, SizeBoundExceeded, UnknownNameError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]
CanonicalCode = Tuple[int, Tuple[int, ...], Tuple[int, ...]]


def _normalize_edges(n: int, edges: Iterable[Sequence[int]], loops_allowed: bool) -> Tuple[Edge, ...]:
    normalized = []
    for edge in edges:
        if len(edge) != 2:
            raise InvalidGraphError(f"edge {edge!r} is not a pair")
        u, v = int(edge[0]), int(edge[1])
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidGraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
        if u == v and not loops_allowed:
            raise InvalidGraphError(f"loop at node {u} but loops are not allowed")
        normalized.append((u, v) if u <= v else (v, u))
    return tuple(sorted(normalized))


@dataclass(frozen=True)
class Multigraph:
    """Finite graph on nodes 0..n-1; a repeated pair is a multi-edge.

    Args:
        n: node count
        edges: unordered pairs, repetition encodes multiplicity
        loops_allowed: whether (v, v) pairs may occur
    """

    n: int
    edges: Tuple[Edge, ...] = ()
    loops_allowed: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise InvalidGraphError(f"node count must be nonnegative, got {self.n}")
        object.__setattr__(self, "edges", _normalize_edges(self.n, self.edges, self.loops_allowed))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def multiplicities(self) -> np.ndarray:
        """Symmetric integer matrix of edge multiplicities; the diagonal counts loops."""
        m = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            m[u, v] += 1
            if u != v:
                m[v, u] += 1
        return m

    def edge_counter(self) -> Counter:
        return Counter(self.edges)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @property
    def is_simple(self) -> bool:
        counter = self.edge_counter()
        return all(u != v and c == 1 for (u, v), c in counter.items())

    def as_simple(self) -> "SimpleGraph":
        if not self.is_simple:
            raise InvalidGraphError("graph has loops or multi-edges; not a simple graph")
        return SimpleGraph.from_edges(self.n, self.edges)

    def simplify(self) -> "Multigraph":
        """Collapse multi-edges to single edges (loops kept once)."""
        return Multigraph(self.n, tuple(sorted(set(self.edges))), self.loops_allowed)

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return nx.is_connected(g)


@dataclass(frozen=True, eq=False)
class SimpleGraph:
    """Simple graph stored as a read-only boolean adjacency matrix."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.array(self.adj, dtype=bool, copy=True)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidGraphError(f"adjacency must be square, got shape {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise InvalidGraphError("adjacency is not symmetric")
        if adj.diagonal().any():
            raise InvalidGraphError("simple graphs have no loops")
        adj.setflags(write=False)
        object.__setattr__(self, "adj", adj)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "SimpleGraph":
        adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidGraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            if u == v:
                raise InvalidGraphError(f"loop at node {u} in a simple graph")
            if adj[u, v]:
                raise InvalidGraphError(f"repeated edge ({u}, {v}) in a simple graph")
            adj[u, v] = adj[v, u] = True
        return cls(adj)

    @classmethod
    def empty(cls, n: int) -> "SimpleGraph":
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        return cls(~np.eye(n, dtype=bool))

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "SimpleGraph":
        nodes = sorted(g.nodes())
        return cls(nx.to_numpy_array(g, nodelist=nodes, dtype=float) > 0)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        us, vs = np.nonzero(np.triu(self.adj, 1))
        return tuple(zip(us.tolist(), vs.tolist()))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.adj.sum(axis=1).astype(np.int64)

    @cached_property
    def adjacency_float(self) -> np.ndarray:
        a = self.adj.astype(float)
        a.setflags(write=False)
        return a

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.adj[v])

    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def complement(self) -> "SimpleGraph":
        return SimpleGraph(~self.adj & ~np.eye(self.n, dtype=bool))

    def relabel(self, order: Sequence[int]) -> "SimpleGraph":
        """Node i of the result is node order[i] of self."""
        order = np.asarray(order, dtype=np.int64)
        return SimpleGraph(self.adj[np.ix_(order, order)])

    def is_connected(self) -> bool:
        return self.as_multigraph().is_connected()

    def as_multigraph(self) -> Multigraph:
        return Multigraph(self.n, self.edges)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimpleGraph):
            return NotImplemented
        return self.adj.shape == other.adj.shape and bool(np.array_equal(self.adj, other.adj))

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"SimpleGraph(n={self.n}, m={self.num_edges})"


GraphLike = Union[SimpleGraph, Multigraph]


def as_multigraph(graph: GraphLike) -> Multigraph:
    return graph if isinstance(graph, Multigraph) else graph.as_multigraph()


def as_simple(graph: GraphLike) -> SimpleGraph:
    return graph if isinstance(graph, SimpleGraph) else graph.as_simple()


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Node weights alpha (positive) and symmetric edge weights beta (diagonal = loop weights)."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float, copy=True).reshape(-1)
        beta = np.array(self.beta, dtype=float, copy=True)
        n = alpha.shape[0]
        if beta.shape != (n, n):
            raise InvalidGraphError(f"beta must be {n}x{n}, got shape {beta.shape}")
        if n and (alpha <= 0).any():
            raise InvalidGraphError("node weights must be positive")
        if not np.allclose(beta, beta.T, atol=1e-12):
            raise InvalidGraphError("edge weights must be symmetric")
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_graph(cls, graph: GraphLike) -> "WeightedGraph":
        """Unit node weights, edge weight = multiplicity."""
        mg = as_multigraph(graph)
        return cls(np.ones(mg.n), mg.multiplicities().astype(float))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    @property
    def alpha_total(self) -> float:
        return float(self.alpha.sum())

    @property
    def beta_max(self) -> float:
        return float(np.abs(self.beta).max()) if self.n else 0.0

    def normalized(self) -> "WeightedGraph":
        return WeightedGraph(self.alpha / self.alpha_total, self.beta)

    def to_json(self) -> str:
        return WeightedGraphDocument(n=self.n, alpha=self.alpha.tolist(),
                                     beta=self.beta.reshape(-1).tolist()).model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        try:
            doc = WeightedGraphDocument.model_validate_json(text)
        except ValidationError as e:
            raise InvalidGraphError(f"invalid weighted graph document: {e}") from e
        return cls(np.array(doc.alpha), np.array(doc.beta).reshape(doc.n, doc.n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return bool(np.array_equal(self.alpha, other.alpha) and np.array_equal(self.beta, other.beta))

    def __hash__(self) -> int:
        return hash((self.alpha.tobytes(), self.beta.tobytes()))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, alpha_total={self.alpha_total:.6g})"


class WeightedGraphDocument(BaseModel):
    """JSON form: beta is row-major, either flat or nested."""

    n: int
    alpha: List[float]
    beta: List[float]

    @field_validator("beta", mode="before")
    @classmethod
    def _flatten(cls, value):
        if value and isinstance(value[0], (list, tuple)):
            return [x for row in value for x in row]
        return value

    @model_validator(mode="after")
    def _sizes(self) -> "WeightedGraphDocument":
        if len(self.alpha) != self.n or len(self.beta) != self.n * self.n:
            raise ValueError(f"weighted graph document sizes do not match n={self.n}")
        return self


@dataclass(frozen=True)
class KLabeledGraph:
    """Multigraph with labels 1..k; labels[i] is the node carrying label i+1."""

    base: Multigraph
    labels: Tuple[int, ...] = ()

    def __post_init__(self):
        labels = tuple(int(v) for v in self.labels)
        if len(set(labels)) != len(labels):
            raise InvalidGraphError(f"labels must be injective, got {labels}")
        if any(not 0 <= v < self.base.n for v in labels):
            raise InvalidGraphError(f"label nodes {labels} outside 0..{self.base.n - 1}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def fully_labeled(cls, graph: GraphLike) -> "KLabeledGraph":
        mg = as_multigraph(graph)
        return cls(mg, tuple(range(mg.n)))

    @classmethod
    def unlabeled(cls, graph: GraphLike) -> "KLabeledGraph":
        return cls(as_multigraph(graph), ())

    @classmethod
    def empty_labeled(cls, k: int) -> "KLabeledGraph":
        """O_k: k labeled nodes, no edges (the unit of the k-labeled algebra)."""
        return cls(Multigraph(k), tuple(range(k)))

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def n(self) -> int:
        return self.base.n

    def colors(self) -> Tuple[int, ...]:
        color = [0] * self.base.n
        for i, v in enumerate(self.labels):
            color[v] = i + 1
        return tuple(color)


def glue(f1: KLabeledGraph, f2: KLabeledGraph) -> KLabeledGraph:
    """Product of two k-labeled graphs: disjoint union with equal labels identified."""
    if f1.k != f2.k:
        raise LabelMismatchError(f"cannot glue a {f1.k}-labeled graph with a {f2.k}-labeled graph")
    label_of = {v: i for i, v in enumerate(f2.labels)}
    mapping = {}
    next_node = f1.n
    for v in range(f2.n):
        if v in label_of:
            mapping[v] = f1.labels[label_of[v]]
        else:
            mapping[v] = next_node
            next_node += 1
    edges = f1.base.edges + tuple((mapping[u], mapping[v]) for u, v in f2.base.edges)
    loops = f1.base.loops_allowed or f2.base.loops_allowed
    return KLabeledGraph(Multigraph(next_node, edges, loops), f1.labels)


def tensor(f: KLabeledGraph, g: KLabeledGraph) -> KLabeledGraph:
    """Disjoint union; labels of g are shifted up by f.k."""
    shift = f.n
    edges = f.base.edges + tuple((u + shift, v + shift) for u, v in g.base.edges)
    loops = f.base.loops_allowed or g.base.loops_allowed
    labels = f.labels + tuple(v + shift for v in g.labels)
    return KLabeledGraph(Multigraph(f.n + g.n, edges, loops), labels)


def unlabel(f: Union[KLabeledGraph, Multigraph], drop_isolated: bool = False) -> Multigraph:
    base = f.base if isinstance(f, KLabeledGraph) else f
    if not drop_isolated:
        return base
    deg = base.degrees()
    keep = [v for v in range(base.n) if deg[v] > 0]
    index = {v: i for i, v in enumerate(keep)}
    edges = tuple((index[u], index[v]) for u, v in base.edges)
    return Multigraph(len(keep), edges, base.loops_allowed)


def blow_up(graph: SimpleGraph, m: int) -> SimpleGraph:
    """Replace every node by m twins; copy c of node v becomes node v*m + c."""
    if m < 1:
        raise InvalidGraphError(f"blow-up factor must be positive, got {m}")
    return SimpleGraph(np.kron(graph.adj, np.ones((m, m), dtype=bool)))


def induce(graph: SimpleGraph, nodes: Sequence[int]) -> SimpleGraph:
    """Induced subgraph; node i of the result is nodes[i]."""
    nodes = np.asarray(list(nodes), dtype=np.int64)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= graph.n):
        raise InvalidGraphError(f"node set is not inside 0..{graph.n - 1}")
    if np.unique(nodes).size != nodes.size:
        raise InvalidGraphError("node set has repeated nodes")
    return SimpleGraph(graph.adj[np.ix_(nodes, nodes)])


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks covering 0..n-1."""

    blocks: Tuple[FrozenSet[int], ...]
    n: int

    def __post_init__(self):
        blocks = tuple(frozenset(int(v) for v in b) for b in self.blocks)
        seen = set()
        for block in blocks:
            if not block:
                raise InvalidGraphError("partition blocks must be nonempty")
            if seen & block:
                raise InvalidGraphError("partition blocks overlap")
            seen |= block
        if seen != set(range(self.n)):
            raise InvalidGraphError(f"partition does not cover 0..{self.n - 1}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_assignment(cls, assignment: Sequence[int]) -> "Partition":
        """Blocks ordered by class id; empty classes are skipped."""
        assignment = np.asarray(assignment)
        blocks = [frozenset(np.flatnonzero(assignment == c).tolist()) for c in np.unique(assignment)]
        return cls(tuple(blocks), int(assignment.size))

    @classmethod
    def single(cls, n: int) -> "Partition":
        return cls((frozenset(range(n)),), n)

    @property
    def size(self) -> int:
        return len(self.blocks)

    def assignment(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for i, block in enumerate(self.blocks):
            out[list(block)] = i
        return out

    def block_sizes(self) -> np.ndarray:
        return np.array([len(b) for b in self.blocks], dtype=np.int64)


# ---------------------------------------------------------------------------
# canonical forms
# ---------------------------------------------------------------------------

def _refine(m: np.ndarray, colors: Tuple[int, ...]) -> Tuple[int, ...]:
    """Colour refinement to a stable partition; colours are ranks of sorted signatures."""
    n = len(colors)
    current = list(colors)
    while True:
        signatures = []
        for v in range(n):
            neigh = tuple(sorted((current[u], int(m[v, u])) for u in range(n) if u != v and m[v, u]))
            signatures.append((current[v], int(m[v, v]), neigh))
        ranking = {sig: r for r, sig in enumerate(sorted(set(signatures)))}
        refined = [ranking[s] for s in signatures]
        if len(set(refined)) == len(set(current)):
            return tuple(refined)
        current = refined


def _cell_is_twin_class(m: np.ndarray, cell: List[int], colors: Tuple[int, ...]) -> bool:
    """True when every permutation of the cell is a colour-preserving automorphism."""
    inside = set(cell)
    outside = [u for u in range(len(colors)) if u not in inside]
    first = cell[0]
    ref_out = m[first, outside]
    ref_loop = m[first, first]
    ref_in = {int(m[first, u]) for u in cell if u != first}
    if len(ref_in) > 1:
        return False
    for v in cell[1:]:
        if m[v, v] != ref_loop or not np.array_equal(m[v, outside], ref_out):
            return False
        if {int(m[v, u]) for u in cell if u != v} != ref_in:
            return False
    return True


def _search(m: np.ndarray, initial: Tuple[int, ...], colors: Tuple[int, ...]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    n = len(colors)
    if len(set(colors)) == n:
        order = sorted(range(n), key=lambda v: colors[v])
        permuted = m[np.ix_(order, order)]
        upper = tuple(int(x) for x in permuted[np.triu_indices(n)])
        return (tuple(initial[v] for v in order), upper), tuple(order)
    cells: Dict[int, List[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    target = min(c for c, members in cells.items() if len(members) > 1)
    cell = cells[target]
    candidates = cell[:1] if _cell_is_twin_class(m, cell, colors) else cell
    best = None
    for v in candidates:
        split = tuple(2 * c + (0 if u == v else 1) for u, c in enumerate(colors))
        result = _search(m, initial, _refine(m, split))
        if best is None or result[0] > best[0]:
            best = result
    return best


@lru_cache(maxsize=65536)
def _canonical_cached(n: int, edges: Tuple[Edge, ...], initial: Tuple[int, ...]) -> Tuple[CanonicalCode, Tuple[int, ...]]:
    m = np.zeros((n, n), dtype=np.int64)
    for u, v in edges:
        m[u, v] += 1
        if u != v:
            m[v, u] += 1
    if n == 0:
        return (0, (), ()), ()
    key, order = _search(m, initial, _refine(m, initial))
    return (n, key[0], key[1]), order


def canonical_form(graph: Union[GraphLike, KLabeledGraph], root: Optional[int] = None) -> CanonicalCode:
    """Isomorphism-invariant code: equal iff isomorphic (label- and root-preserving).

    Args:
        graph: simple graph, multigraph or k-labeled graph
        root: optional root node (rooted isomorphism)

    Returns:
        (n, initial colours in canonical order, upper-triangle multiplicities)
    """
    return canonical_labeling(graph, root)[0]


def canonical_labeling(graph: Union[GraphLike, KLabeledGraph], root: Optional[int] = None) -> Tuple[CanonicalCode, Tuple[int, ...]]:
    """Canonical code together with the node order that realises it."""
    if isinstance(graph, KLabeledGraph):
        base, initial = graph.base, graph.colors()
    else:
        base = as_multigraph(graph)
        initial = tuple([0] * base.n)
    if root is not None:
        if not 0 <= root < base.n:
            raise InvalidGraphError(f"root {root} outside 0..{base.n - 1}")
        initial = tuple(c + 1 if v == root else c for v, c in enumerate(initial))
    settings = get_settings()
    distinguished = root is not None or any(initial)
    limit = settings.canonical_max_rooted if distinguished else settings.canonical_max_nodes
    if base.n > limit:
        raise SizeBoundExceeded("canonical_max_rooted" if distinguished else "canonical_max_nodes", limit, base.n)
    return _canonical_cached(base.n, base.edges, initial)


def decode_canonical(code: CanonicalCode) -> Tuple[Multigraph, Tuple[int, ...]]:
    """Graph and initial colours from a canonical code."""
    n, colors, upper = code
    rows, cols = np.triu_indices(n)
    edges = []
    loops = False
    for u, v, mult in zip(rows.tolist(), cols.tolist(), upper):
        if u == v and mult:
            loops = True
        edges.extend([(u, v)] * int(mult))
    return Multigraph(n, tuple(edges), loops), tuple(colors)


def labeled_from_canonical(code: CanonicalCode) -> KLabeledGraph:
    base, colors = decode_canonical(code)
    k = max(colors, default=0)
    labels = [0] * k
    for v, c in enumerate(colors):
        if c:
            labels[c - 1] = v
    return KLabeledGraph(base, tuple(labels))


def is_isomorphic(g1: Union[GraphLike, KLabeledGraph], g2: Union[GraphLike, KLabeledGraph]) -> bool:
    return canonical_form(g1) == canonical_form(g2)


# ---------------------------------------------------------------------------
# quantum graphs
# ---------------------------------------------------------------------------

Coefficient = Union[Fraction, float]


def _coerce(value: Number) -> Coefficient:
    if isinstance(value, Rational):
        return Fraction(value)
    return float(value)


@dataclass(frozen=True, eq=False)
class QuantumGraph:
    """Finite linear combination of k-labeled graphs keyed by canonical code.

    Integer and Fraction coefficients stay exact; float coefficients are allowed
    and turn the affected terms into floats.
    """

    k: int
    terms: Dict[CanonicalCode, Coefficient] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {code: _coerce(c) for code, c in self.terms.items() if c != 0}
        for code in cleaned:
            if max(code[1], default=0) != self.k:
                raise LabelMismatchError(f"term with labels {code[1]} does not belong to a {self.k}-labeled combination")
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def of(cls, graph: KLabeledGraph, coefficient: Number = 1) -> "QuantumGraph":
        return cls(graph.k, {canonical_form(graph): coefficient})

    @classmethod
    def zero(cls, k: int) -> "QuantumGraph":
        return cls(k, {})

    @classmethod
    def combination(cls, pairs: Iterable[Tuple[Number, KLabeledGraph]], k: Optional[int] = None) -> "QuantumGraph":
        total = None
        for coefficient, graph in pairs:
            term = cls.of(graph, coefficient)
            total = term if total is None else total + term
        if total is None:
            return cls.zero(k or 0)
        return total

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def max_nodes(self) -> int:
        """N(x): largest node count over the terms."""
        return max((code[0] for code in self.terms), default=0)

    def graphs(self) -> Iterator[Tuple[KLabeledGraph, Coefficient]]:
        for code in sorted(self.terms):
            yield labeled_from_canonical(code), self.terms[code]

    def _check(self, other: "QuantumGraph") -> None:
        if self.k != other.k:
            raise LabelMismatchError(f"cannot combine {self.k}-labeled and {other.k}-labeled quantum graphs")

    def __add__(self, other: "QuantumGraph") -> "QuantumGraph":
        self._check(other)
        terms = dict(self.terms)
        for code, c in other.terms.items():
            terms[code] = terms.get(code, 0) + c
        return QuantumGraph(self.k, terms)

    def __neg__(self) -> "QuantumGraph":
        return QuantumGraph(self.k, {code: -c for code, c in self.terms.items()})

    def __sub__(self, other: "QuantumGraph") -> "QuantumGraph":
        return self + (-other)

    def scale(self, factor: Number) -> "QuantumGraph":
        factor = _coerce(factor)
        return QuantumGraph(self.k, {code: c * factor for code, c in self.terms.items()})

    def __mul__(self, other: Union["QuantumGraph", Number]) -> "QuantumGraph":
        if isinstance(other, QuantumGraph):
            return self.glue(other)
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other: Number) -> "QuantumGraph":
        if isinstance(other, Number):
            return self.scale(other)
        return NotImplemented

    def _bilinear(self, other: "QuantumGraph", product: Callable[[KLabeledGraph, KLabeledGraph], KLabeledGraph], k: int) -> "QuantumGraph":
        terms: Dict[CanonicalCode, Coefficient] = {}
        for g1, c1 in self.graphs():
            for g2, c2 in other.graphs():
                code = canonical_form(product(g1, g2))
                terms[code] = terms.get(code, 0) + c1 * c2
        return QuantumGraph(k, terms)

    def glue(self, other: "QuantumGraph") -> "QuantumGraph":
        self._check(other)
        return self._bilinear(other, glue, self.k)

    def tensor(self, other: "QuantumGraph") -> "QuantumGraph":
        return self._bilinear(other, tensor, self.k + other.k)

    def unlabel(self, drop_isolated: bool = False) -> "QuantumGraph":
        """Forget labels; the result is a 0-labeled quantum graph."""
        terms: Dict[CanonicalCode, Coefficient] = {}
        for graph, c in self.graphs():
            code = canonical_form(KLabeledGraph.unlabeled(unlabel(graph, drop_isolated)))
            terms[code] = terms.get(code, 0) + c
        return QuantumGraph(0, terms)

    def simplify(self) -> "QuantumGraph":
        """Collapse multi-edges in every term (the simple-graph algebra)."""
        terms: Dict[CanonicalCode, Coefficient] = {}
        for graph, c in self.graphs():
            code = canonical_form(KLabeledGraph(graph.base.simplify(), graph.labels))
            terms[code] = terms.get(code, 0) + c
        return QuantumGraph(self.k, terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantumGraph):
            return NotImplemented
        return self.k == other.k and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.k, tuple(sorted(self.terms.items()))))

    def __repr__(self) -> str:
        if not self.terms:
            return f"QuantumGraph(k={self.k}, 0)"
        parts = []
        for graph, c in self.graphs():
            parts.append(f"{c}*[n={graph.n} E={list(graph.base.edges)} L={list(graph.labels)}]")
        return f"QuantumGraph(k={self.k}, " + " + ".join(parts) + ")"


# ---------------------------------------------------------------------------
# named small graphs and edge-list IO
# ---------------------------------------------------------------------------

NAMED_GRAPHS: Dict[str, Callable[[], SimpleGraph]] = {
    "K1": lambda: SimpleGraph.empty(1),
    "vertex": lambda: SimpleGraph.empty(1),
    "edge": lambda: SimpleGraph.complete(2),
    "K2": lambda: SimpleGraph.complete(2),
    "O2": lambda: SimpleGraph.empty(2),
    "P3": lambda: SimpleGraph.from_edges(3, [(0, 1), (1, 2)]),
    "cherry": lambda: SimpleGraph.from_edges(3, [(0, 1), (1, 2)]),
    "triangle": lambda: SimpleGraph.complete(3),
    "K3": lambda: SimpleGraph.complete(3),
    "P4": lambda: SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]),
    "C4": lambda: SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    "square": lambda: SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    "star3": lambda: SimpleGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)]),
    "paw": lambda: SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 0), (0, 3)]),
    "diamond": lambda: SimpleGraph.from_edges(4, [(0, 1), (1, 2), (2, 0), (1, 3), (2, 3)]),
    "K4": lambda: SimpleGraph.complete(4),
    "2K2": lambda: SimpleGraph.from_edges(4, [(0, 1), (2, 3)]),
    "C5": lambda: SimpleGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)]),
    "petersen": lambda: SimpleGraph.from_networkx(nx.petersen_graph()),
}


def named_graph(name: str) -> SimpleGraph:
    if name not in NAMED_GRAPHS:
        raise UnknownNameError(f"unknown graph name '{name}'; known: {', '.join(sorted(NAMED_GRAPHS))}")
    return NAMED_GRAPHS[name]()


def connected_catalog(max_nodes: int = 4) -> List[SimpleGraph]:
    """All connected simple graphs with 2..max_nodes nodes, one per isomorphism class."""
    catalog: Dict[CanonicalCode, SimpleGraph] = {}
    for k in range(2, max_nodes + 1):
        for graph in all_graphs(k):
            if graph.is_connected():
                catalog.setdefault(canonical_form(graph), graph)
    return [catalog[code] for code in sorted(catalog)]


def all_graphs(k: int) -> Iterator[SimpleGraph]:
    """Every labeled simple graph on k nodes (2^(k choose 2) of them)."""
    pairs = [(u, v) for u in range(k) for v in range(u + 1, k)]
    for mask in range(1 << len(pairs)):
        adj = np.zeros((k, k), dtype=bool)
        for bit, (u, v) in enumerate(pairs):
            if mask >> bit & 1:
                adj[u, v] = adj[v, u] = True
        yield SimpleGraph(adj)


def parse_edge_list(text: str) -> Multigraph:
    """Parse "n m" followed by m lines "u v" (0-based); '#' starts a comment."""
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if not rows:
        raise InvalidGraphError("edge list is empty")
    try:
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(r[0]), int(r[1])) for r in rows[1:]]
    except (IndexError, ValueError) as e:
        raise InvalidGraphError(f"malformed edge list: {e}") from e
    if len(edges) != m:
        raise InvalidGraphError(f"edge list header announces {m} edges but {len(edges)} follow")
    loops = any(u == v for u, v in edges)
    return Multigraph(n, tuple(edges), loops)


def format_edge_list(graph: GraphLike) -> str:
    mg = as_multigraph(graph)
    lines = [f"{mg.n} {mg.num_edges}"] + [f"{u} {v}" for u, v in mg.edges]
    return "\n".join(lines) + "\n"


def read_edge_list(path: Union[str, Path]) -> Multigraph:
    return parse_edge_list(Path(path).read_text())


def read_weighted_graph(path: Union[str, Path]) -> WeightedGraph:
    return WeightedGraph.from_json(Path(path).read_text())
