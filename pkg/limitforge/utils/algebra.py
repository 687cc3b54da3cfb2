"""
Graph algebras: connection matrices, the induced-subgraph idempotents, the
perfect matching parameter, square-sum certificates and the extremal
inequality battery.

Products of k-labeled graphs create parallel edges. With simple=True they are
collapsed, which is the algebra of simple graphs (parameters hom(., G) for
simple G); with simple=False products stay multigraphs.
"""

import itertools
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError, field_validator
from scipy.linalg import eigvalsh

from limitforge.utils.errors import DomainError, InvalidGraphError, LabelMismatchError
from limitforge.utils.generators import path
from limitforge.utils.graph_core import (
    CanonicalCode,
    GraphLike,
    KLabeledGraph,
    Multigraph,
    QuantumGraph,
    SimpleGraph,
    WeightedGraph,
    all_graphs,
    as_multigraph,
    canonical_form,
    glue,
    named_graph,
    unlabel,
)
from limitforge.utils.graphon import Graphon, StepGraphon, random_step_graphon, t_graphon
from limitforge.utils.homcount import density, eval_quantum, hom_weighted, missing_pairs
from limitforge.utils.state import DensityKind, EstimationMethod

logger = logging.getLogger(__name__)

Parameter = Callable[[Multigraph], Any]


# ---------------------------------------------------------------------------
# bases and connection matrices
# ---------------------------------------------------------------------------

def labeled_basis(k: int, max_nodes: int) -> List[KLabeledGraph]:
    """All simple k-labeled graphs on k..max_nodes nodes, one per isomorphism class, labels on nodes 0..k-1."""
    if max_nodes < k:
        return []
    seen: Dict[CanonicalCode, KLabeledGraph] = {}
    for n in range(max(k, 1), max_nodes + 1):
        for graph in all_graphs(n):
            labeled = KLabeledGraph(graph.as_multigraph(), tuple(range(k)))
            seen.setdefault(canonical_form(labeled), labeled)
    return [seen[code] for code in sorted(seen)]


def _product(f1: KLabeledGraph, f2: KLabeledGraph, simple: bool) -> Multigraph:
    base = glue(f1, f2).base
    return base.simplify() if simple else base


@dataclass
class ConnectionSubmatrix:
    k: int
    basis: List[KLabeledGraph]
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return len(self.basis)


def connection_submatrix(f: Parameter, k: int, basis: Sequence[KLabeledGraph], simple: bool = False) -> ConnectionSubmatrix:
    """M_ab = f(unlabel(F_a F_b)), isolated nodes kept."""
    basis = list(basis)
    for graph in basis:
        if graph.k != k:
            raise LabelMismatchError(f"basis graph has {graph.k} labels, expected {k}")
    m = np.zeros((len(basis), len(basis)))
    for a, b in itertools.combinations_with_replacement(range(len(basis)), 2):
        try:
            value = float(f(_product(basis[a], basis[b], simple)))
        except (ArithmeticError, ValueError) as e:
            raise DomainError(f"parameter failed on a basis product: {e}") from e
        m[a, b] = m[b, a] = value
    return ConnectionSubmatrix(k, basis, m)


@dataclass
class PsdReport:
    is_psd: bool
    min_eigenvalue: float
    rank: int


def psd_rank_check(m: np.ndarray, tol: float = 1e-9) -> PsdReport:
    """PSD iff the least eigenvalue is >= -tol; rank counts eigenvalues above tol * largest."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return PsdReport(True, 0.0, 0)
    try:
        eigenvalues = eigvalsh(m)
    except np.linalg.LinAlgError as e:
        raise DomainError(f"eigen decomposition failed: {e}") from e
    largest = float(np.abs(eigenvalues).max())
    rank = int((eigenvalues > tol * max(largest, 1e-300)).sum()) if largest > 0 else 0
    return PsdReport(bool(eigenvalues.min() >= -tol), float(eigenvalues.min()), rank)


# ---------------------------------------------------------------------------
# induced idempotents
# ---------------------------------------------------------------------------

def hat(f: Union[GraphLike, KLabeledGraph]) -> QuantumGraph:
    """Sum over supergraphs F' of F on the same labeled nodes of (-1)^|E(F') minus E(F)| F'."""
    if isinstance(f, KLabeledGraph):
        if f.k != f.n or list(f.labels) != list(range(f.n)):
            raise DomainError("hat needs every node labeled (node i carrying label i+1)")
        base = f.base
    else:
        base = as_multigraph(f)
    if not base.is_simple:
        raise InvalidGraphError("hat is defined for simple graphs")
    simple = base.as_simple()
    pairs = missing_pairs(simple)
    terms: Dict[CanonicalCode, Fraction] = {}
    for mask in range(1 << len(pairs)):
        extra = [pair for bit, pair in enumerate(pairs) if mask >> bit & 1]
        graph = Multigraph(simple.n, simple.edges + tuple(extra))
        code = canonical_form(KLabeledGraph(graph, tuple(range(simple.n))))
        terms[code] = terms.get(code, Fraction(0)) + (-1) ** len(extra)
    return QuantumGraph(simple.n, terms)


# ---------------------------------------------------------------------------
# perfect matchings and kernels
# ---------------------------------------------------------------------------

def perfect_matchings(g: GraphLike) -> int:
    """Number of perfect matchings; parallel edges count separately, loops never match."""
    mg = as_multigraph(g)
    n = mg.n
    if n % 2:
        return 0
    mult = mg.multiplicities()
    np.fill_diagonal(mult, 0)
    mult = mult.astype(np.int64).tolist()

    @lru_cache(maxsize=None)
    def count(remaining: int) -> int:
        if remaining == 0:
            return 1
        v = (remaining & -remaining).bit_length() - 1
        rest = remaining & ~(1 << v)
        total = 0
        for u in range(v + 1, n):
            if rest >> u & 1 and mult[v][u]:
                total += mult[v][u] * count(rest & ~(1 << u))
        return total

    return count((1 << n) - 1)


pm = perfect_matchings


def kernel_test(f: Parameter, x: QuantumGraph, basis: Sequence[KLabeledGraph], tol: float = 1e-9) -> bool:
    """True iff f(x y) vanishes for every basis graph y."""
    if x.is_zero:
        return True
    for y in basis:
        product = x.glue(QuantumGraph.of(y))
        if abs(float(eval_quantum(f, product))) > tol:
            return False
    return True


def labeled_path(nodes: int) -> KLabeledGraph:
    """Path on `nodes` nodes with its two endpoints labeled 1 and 2."""
    p = path(nodes)
    return KLabeledGraph(p.as_multigraph(), (0, nodes - 1))


# ---------------------------------------------------------------------------
# square sums and certificates
# ---------------------------------------------------------------------------

SquareTerm = Tuple[Union[int, Fraction, float], QuantumGraph]


def square_sum_unlabel(terms: Sequence[SquareTerm], simple: bool = True, drop_isolated: bool = True) -> QuantumGraph:
    """sum_i w_i y_i^2 with labels forgotten (and isolated nodes dropped).

    Each y_i lives in its own k-labeled algebra; weights stand for squared
    coefficients so certificates with irrational factors stay exact.
    """
    total = QuantumGraph.zero(0)
    for weight, y in terms:
        if isinstance(weight, (int, Fraction)) and weight < 0:
            raise DomainError(f"square weights must be nonnegative, got {weight}")
        square = y.glue(y)
        if simple:
            square = square.simplify()
        total = total + square.unlabel(drop_isolated).scale(weight)
    if simple:
        total = total.simplify()
    return total


def goodman_certificate() -> List[SquareTerm]:
    """hat(F1)^2 + 2 (F2 - F3)^2 for F = an edge plus an isolated node.

    F1 labels all three nodes, F2 one endpoint of the edge, F3 the isolated node.
    """
    base = Multigraph(3, ((0, 1),))
    f1 = KLabeledGraph(base, (0, 1, 2))
    f2 = KLabeledGraph(base, (0,))
    f3 = KLabeledGraph(base, (2,))
    return [(1, hat(f1)), (2, QuantumGraph.of(f2) - QuantumGraph.of(f3))]


def unlabeled_quantum(pairs: Sequence[Tuple[Union[int, Fraction], GraphLike]]) -> QuantumGraph:
    return QuantumGraph.combination([(c, KLabeledGraph.unlabeled(g)) for c, g in pairs], k=0)


def goodman_target() -> QuantumGraph:
    """K3 - 2 K2^2 + K2 (K2^2 = two disjoint edges)."""
    return unlabeled_quantum([(1, named_graph("K3")), (-2, named_graph("2K2")), (1, named_graph("K2"))])


class GraphTerm(BaseModel):
    n: int
    edges: List[Tuple[int, int]] = []
    labels: List[int] = []
    coefficient: str = "1"

    @field_validator("coefficient")
    @classmethod
    def _rational(cls, value: str) -> str:
        Fraction(value)
        return value


class SquareEntry(BaseModel):
    weight: str = "1"
    graphs: List[GraphTerm]

    @field_validator("weight")
    @classmethod
    def _rational(cls, value: str) -> str:
        if Fraction(value) < 0:
            raise ValueError("square weights must be nonnegative")
        return value


class Certificate(BaseModel):
    name: str = "certificate"
    simple: bool = True
    drop_isolated: bool = True
    squares: List[SquareEntry]
    claim: Optional[List[GraphTerm]] = None


def _quantum_from_terms(terms: Sequence[GraphTerm]) -> QuantumGraph:
    pairs = []
    ks = {len(t.labels) for t in terms}
    if len(ks) > 1:
        raise LabelMismatchError(f"terms of one quantum graph carry different label counts {sorted(ks)}")
    for term in terms:
        graph = KLabeledGraph(Multigraph(term.n, tuple(tuple(e) for e in term.edges)), tuple(term.labels))
        pairs.append((Fraction(term.coefficient), graph))
    return QuantumGraph.combination(pairs, k=ks.pop() if ks else 0)


def _terms_from_quantum(x: QuantumGraph) -> List[GraphTerm]:
    return [GraphTerm(n=g.n, edges=[tuple(e) for e in g.base.edges], labels=list(g.labels), coefficient=str(c))
            for g, c in x.graphs()]


def certificate_to_json(terms: Sequence[SquareTerm], claim: Optional[QuantumGraph] = None, name: str = "certificate",
                        simple: bool = True) -> str:
    doc = Certificate(
        name=name,
        simple=simple,
        squares=[SquareEntry(weight=str(Fraction(w)), graphs=_terms_from_quantum(y)) for w, y in terms],
        claim=_terms_from_quantum(claim) if claim is not None else None,
    )
    return doc.model_dump_json(indent=2)


def load_certificate(source: Union[str, Path]) -> Certificate:
    text = Path(source).read_text() if isinstance(source, Path) or not str(source).lstrip().startswith("{") else str(source)
    try:
        return Certificate.model_validate_json(text)
    except (ValidationError, json.JSONDecodeError) as e:
        raise InvalidGraphError(f"invalid certificate document: {e}") from e


def verify_certificate(cert: Certificate) -> Dict[str, Any]:
    """Expand the squares and compare with the claimed quantum graph coefficient by coefficient."""
    terms = [(Fraction(entry.weight), _quantum_from_terms(entry.graphs)) for entry in cert.squares]
    result = square_sum_unlabel(terms, simple=cert.simple, drop_isolated=cert.drop_isolated)
    claim = _quantum_from_terms(cert.claim) if cert.claim else None
    matches = None if claim is None else result == claim
    if matches is False:
        logger.warning(f"⚠️ certificate '{cert.name}' does not reduce to its claim")
    return {"success": matches is not False, "name": cert.name, "matches": matches, "result": repr(result),
            "terms": len(result.terms)}


def step_density_multigraph(f: Multigraph, w: StepGraphon) -> float:
    """t(F, W) for a multigraph F on a step graphon (parallel edges give powers of W)."""
    return hom_weighted(f, WeightedGraph(w.p, w.B))


def check_nonnegative(x: QuantumGraph, trials: int = 500, seed: int = 0, max_blocks: int = 4) -> Dict[str, float]:
    """Least value of t(x, W) over random step graphons."""
    if x.k != 0:
        raise LabelMismatchError("nonnegativity is checked on unlabeled quantum graphs")
    rng = np.random.default_rng(seed)
    worst = float("inf")
    for _ in range(trials):
        w = random_step_graphon(rng, max_blocks)
        value = float(eval_quantum(lambda f: step_density_multigraph(f, w), x))
        worst = min(worst, value)
    return {"min_value": worst, "trials": trials, "nonnegative": worst >= -1e-9}


# ---------------------------------------------------------------------------
# extremal inequalities
# ---------------------------------------------------------------------------

BATTERY_GRAPHS = {
    "K2": lambda: named_graph("K2"),
    "K3": lambda: named_graph("K3"),
    "C4": lambda: named_graph("C4"),
    "P3": lambda: path(3),
    "P4": lambda: path(4),
    "P5": lambda: path(5),
}


def _densities(target: Union[GraphLike, Graphon], graphs: Dict[str, SimpleGraph], samples: Optional[int],
               seed: int) -> Dict[str, Tuple[float, float]]:
    out = {}
    for i, (name, f) in enumerate(graphs.items()):
        if isinstance(target, StepGraphon):
            out[name] = t_graphon(f, target, EstimationMethod.EXACT)
        elif isinstance(target, Graphon):
            out[name] = t_graphon(f, target, EstimationMethod.MC, samples=samples, seed=seed + i)
        else:
            out[name] = (density(DensityKind.T, f, target), 0.0)
    return out


def inequality_battery(target: Union[GraphLike, Graphon], sidorenko: Optional[GraphLike] = None,
                       samples: Optional[int] = None, seed: int = 0) -> pd.DataFrame:
    """Margins (lhs - rhs, nonnegative when the inequality holds) for the classical density inequalities.

    Exact targets flag any margin below -1e-12; Monte Carlo targets flag a
    violation only beyond 4 standard errors (delta method). The Sidorenko row
    is reported without a verdict.
    """
    graphs = {name: build() for name, build in BATTERY_GRAPHS.items()}
    if sidorenko is not None:
        sid = as_multigraph(sidorenko).as_simple()
        if not nx.is_bipartite(sid.to_networkx()):
            raise DomainError("the Sidorenko row needs a bipartite graph")
        graphs["F"] = sid
    t = _densities(target, graphs, samples, seed)
    e, se = t["K2"]
    rows = []

    def add(name: str, lhs: float, rhs: float, stderr: float, report_only: bool = False):
        margin = lhs - rhs
        threshold = 4 * stderr if stderr > 0 else 1e-12
        rows.append({"inequality": name, "lhs": lhs, "rhs": rhs, "margin": margin, "stderr": stderr,
                     "violated": None if report_only else bool(margin < -threshold), "report_only": report_only})

    k3, s3 = t["K3"]
    add("goodman", k3, e * (2 * e - 1), float(np.hypot(s3, (4 * e - 1) * se)))
    add("kruskal-katona", e ** 1.5, k3, float(np.hypot(s3, 1.5 * e ** 0.5 * se)))
    c4, s4 = t["C4"]
    add("erdos-c4", c4, e ** 4, float(np.hypot(s4, 4 * e ** 3 * se)))
    for k in (3, 4, 5):
        pk, sk = t[f"P{k}"]
        add(f"blakley-roy-P{k}", pk, e ** (k - 1), float(np.hypot(sk, (k - 1) * e ** (k - 2) * se)))
    if sidorenko is not None:
        tf, sf = t["F"]
        m = graphs["F"].num_edges
        add("sidorenko", tf, e ** m, float(np.hypot(sf, m * e ** max(m - 1, 0) * se)), report_only=True)
    return pd.DataFrame(rows)
