"""
Ground state energies, multiway cuts and partition functions.

Conventions: e_G(S, T) counts ordered adjacent pairs (u in S, v in T), so an
edge inside S n T is counted twice. A map phi: V(G) -> [q] has multicut value
(1/n^2) sum_{u,v} A_uv beta_phi(u)phi(v) = (2/n^2) sum over edges, and energy
E_phi = (2/n^2) sum over edges of J_phi(u)phi(v).
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import log, log2
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from limitforge.utils.config import get_settings
from limitforge.utils.errors import DomainError, InfeasibleBalanceError, SizeBoundExceeded
from limitforge.utils.graph_core import GraphLike, SimpleGraph, WeightedGraph, as_simple
from limitforge.utils.homcount import hom_weighted
from limitforge.utils.state import EstimationMethod, Mode, PartitionVariant

logger = logging.getLogger(__name__)

ASSIGNMENT_CHUNK = 1 << 15
CUT_HOM_H = WeightedGraph(np.ones(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


# ---------------------------------------------------------------------------
# enumeration helpers
# ---------------------------------------------------------------------------

def _check_enumeration(q: int, n: int, what: str) -> None:
    limit = get_settings().enumeration_limit
    requested = float(q) ** n
    if requested > limit:
        raise SizeBoundExceeded("enumeration_limit", limit, requested, what)


def _labels(start: int, stop: int, n: int, q: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    return (idx[:, None] // (q ** np.arange(n, dtype=np.int64))[None, :]) % q


def _scan(n: int, q: int, fn: Callable[[np.ndarray], object]) -> List[object]:
    """Apply fn to every chunk of maps V -> [q]; results come back in chunk order."""
    total = q ** n
    bounds = [(s, min(s + ASSIGNMENT_CHUNK, total)) for s in range(0, total, ASSIGNMENT_CHUNK)]

    def run(bound: Tuple[int, int]) -> object:
        return fn(_labels(bound[0], bound[1], n, q))

    threads = get_settings().threads
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, bounds))
    return [run(b) for b in bounds]


def _edge_arrays(g: SimpleGraph) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.array(g.edges, dtype=np.int64).reshape(-1, 2)
    return edges[:, 0], edges[:, 1]


def _edge_sums(labels: np.ndarray, eu: np.ndarray, ev: np.ndarray, weights: np.ndarray) -> np.ndarray:
    if eu.size == 0:
        return np.zeros(labels.shape[0])
    return weights[labels[:, eu], labels[:, ev]].sum(axis=1)


def _symmetric(matrix: Sequence[Sequence[float]], what: str) -> np.ndarray:
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{what} must be a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=1e-12):
        raise DomainError(f"{what} must be symmetric")
    return m


# ---------------------------------------------------------------------------
# max cut
# ---------------------------------------------------------------------------

@dataclass
class CutResult:
    value: float
    witness: List[int]
    exact: bool = True


def max_weighted_cut(weights: np.ndarray) -> Tuple[float, np.ndarray]:
    """max over S of sum_{i in S, j not in S} w_ij, by enumeration (last element fixed outside S)."""
    w = np.asarray(weights, dtype=float)
    m = w.shape[0]
    limit = get_settings().maxcut_exact_max
    if m > limit:
        raise SizeBoundExceeded("maxcut_exact_max", limit, m)
    if m <= 1:
        return 0.0, np.zeros(m, dtype=bool)
    free = m - 1
    rows = w.sum(axis=1)
    best_value, best_mask = -np.inf, 0
    total = 1 << free
    for start in range(0, total, ASSIGNMENT_CHUNK):
        masks = np.arange(start, min(start + ASSIGNMENT_CHUNK, total), dtype=np.int64)
        bits = ((masks[:, None] >> np.arange(free)) & 1).astype(float)
        bits = np.hstack([bits, np.zeros((bits.shape[0], 1))])
        values = bits @ rows - np.einsum("ci,ij,cj->c", bits, w, bits)
        i = int(np.argmax(values))
        if values[i] > best_value + 1e-15:
            best_value, best_mask = float(values[i]), int(masks[i])
    side = np.array([(best_mask >> i) & 1 for i in range(free)] + [0], dtype=bool)
    return best_value, side


def _local_cut(w: np.ndarray, rng: np.random.Generator, restarts: int) -> Tuple[float, np.ndarray]:
    m = w.shape[0]
    best_value, best_side = -np.inf, np.zeros(m, dtype=bool)
    for _ in range(restarts):
        side = rng.random(m) < 0.5
        while True:
            s = side.astype(float)
            same = np.where(side, w @ s, w @ (1.0 - s)) - np.diag(w)
            other = np.where(side, w @ (1.0 - s), w @ s)
            gain = same - other
            u = int(np.argmax(gain))
            if gain[u] <= 1e-12:
                break
            side[u] = not side[u]
        s = side.astype(float)
        value = float(s @ w @ (1.0 - s))
        if value > best_value:
            best_value, best_side = value, side.copy()
    return best_value, best_side


def maxcut(g: GraphLike, mode: Mode = Mode.EXACT, seed: int = 0, restarts: Optional[int] = None) -> CutResult:
    """max_S e_G(S, V minus S) / n^2 with a witness set S.

    Args:
        g: the graph
        mode: Mode.EXACT (n <= maxcut_exact_max) or Mode.LOCAL (greedy flips, lower bound)
        seed: restart seed for local mode
        restarts: local restart count (settings default)
    """
    gs = as_simple(g)
    mode = Mode(mode)
    if gs.n == 0:
        return CutResult(0.0, [], True)
    a = gs.adjacency_float
    scale = 1.0 / gs.n ** 2
    if mode is Mode.EXACT:
        value, side = max_weighted_cut(a)
        return CutResult(value * scale, np.flatnonzero(side).tolist(), True)
    value, side = _local_cut(a, np.random.default_rng(seed), restarts or get_settings().local_search_restarts)
    return CutResult(value * scale, np.flatnonzero(side).tolist(), False)


# ---------------------------------------------------------------------------
# multiway cuts
# ---------------------------------------------------------------------------

@dataclass
class MulticutResult:
    value: float
    assignment: List[int]
    exact: bool = True


def _best_over_maps(gs: SimpleGraph, beta: np.ndarray, allowed: Optional[np.ndarray] = None) -> Tuple[float, List[int]]:
    q = beta.shape[0]
    eu, ev = _edge_arrays(gs)

    def chunk(labels: np.ndarray):
        values = 2.0 * _edge_sums(labels, eu, ev, beta)
        if allowed is not None:
            values = np.where(_balanced_rows(labels, q, allowed), values, -np.inf)
        i = int(np.argmax(values))
        return float(values[i]), labels[i].tolist()

    results = _scan(gs.n, q, chunk)
    value, labels = max(results, key=lambda r: r[0])
    if not np.isfinite(value):
        raise InfeasibleBalanceError("no map satisfies the balance constraint")
    return value / gs.n ** 2, labels


def _local_multicut(gs: SimpleGraph, beta: np.ndarray, rng: np.random.Generator, restarts: int) -> Tuple[float, List[int]]:
    q = beta.shape[0]
    a = gs.adjacency_float
    best_value, best = -np.inf, [0] * gs.n
    for _ in range(restarts):
        labels = rng.integers(0, q, size=gs.n)
        improved = True
        while improved:
            improved = False
            for u in range(gs.n):
                counts = np.bincount(labels[a[u] > 0], minlength=q).astype(float)
                gains = beta @ counts
                c = int(np.argmax(gains))
                if gains[c] > gains[labels[u]] + 1e-12:
                    labels[u] = c
                    improved = True
        onehot = np.eye(q)[labels]
        value = float(np.sum((onehot.T @ a @ onehot) * beta)) / gs.n ** 2
        if value > best_value:
            best_value, best = value, labels.tolist()
    return best_value, best


def mmcut(g: GraphLike, beta: Sequence[Sequence[float]], mode: Mode = Mode.EXACT, seed: int = 0) -> MulticutResult:
    """max over partitions (S_1..S_q) of (1/n^2) sum_ij beta_ij e_G(S_i, S_j)."""
    gs = as_simple(g)
    beta = _symmetric(beta, "beta")
    mode = Mode(mode)
    if gs.n == 0:
        return MulticutResult(0.0, [], True)
    if mode is Mode.EXACT:
        _check_enumeration(beta.shape[0], gs.n, "mmcut")
        value, labels = _best_over_maps(gs, beta)
        return MulticutResult(value, labels, True)
    value, labels = _local_multicut(gs, beta, np.random.default_rng(seed), get_settings().local_search_restarts)
    return MulticutResult(value, labels, False)


def balanced_sizes(alpha: Sequence[float], n: int) -> List[Tuple[int, ...]]:
    """Integer class sizes c with |c_i - alpha_i n| < 1 and sum c = n (alpha rescaled to sum 1)."""
    alpha = np.asarray(alpha, dtype=float)
    if (alpha <= 0).any():
        raise DomainError("node weights must be positive")
    target = alpha / alpha.sum() * n
    choices = []
    for t in target:
        low = int(np.floor(t))
        options = {low} if abs(t - low) < 1e-12 else {low, low + 1}
        choices.append(sorted(c for c in options if c >= 0 and abs(c - t) < 1 - 1e-12))
    sizes = [c for c in itertools.product(*choices) if sum(c) == n]
    if not sizes:
        raise InfeasibleBalanceError(f"no integer class sizes meet the proportions {alpha.tolist()} at n={n}")
    return sizes


def _balanced_rows(labels: np.ndarray, q: int, allowed: np.ndarray) -> np.ndarray:
    n = labels.shape[1]
    counts = np.stack([(labels == i).sum(axis=1) for i in range(q)], axis=1)
    codes = counts @ ((n + 1) ** np.arange(q, dtype=np.int64))
    return np.isin(codes, allowed)


def _allowed_codes(sizes: List[Tuple[int, ...]], n: int) -> np.ndarray:
    q = len(sizes[0])
    base = (n + 1) ** np.arange(q, dtype=np.int64)
    return np.array([int(np.dot(s, base)) for s in sizes], dtype=np.int64)


def rmcut(g: GraphLike, h: WeightedGraph, mode: Mode = Mode.EXACT, seed: int = 0) -> MulticutResult:
    """mmcut restricted to partitions with ||S_i| - alpha_i n| < 1 (the microcanonical ground state)."""
    gs = as_simple(g)
    mode = Mode(mode)
    sizes = balanced_sizes(h.alpha, gs.n)
    if gs.n == 0:
        return MulticutResult(0.0, [], True)
    if mode is Mode.EXACT:
        _check_enumeration(h.n, gs.n, "rmcut")
        value, labels = _best_over_maps(gs, h.beta, _allowed_codes(sizes, gs.n))
        return MulticutResult(value, labels, True)
    value, labels = _local_balanced(gs, h.beta, sizes, np.random.default_rng(seed),
                                    get_settings().local_search_restarts)
    return MulticutResult(value, labels, False)


def _local_balanced(gs: SimpleGraph, beta: np.ndarray, sizes: List[Tuple[int, ...]], rng: np.random.Generator,
                    restarts: int) -> Tuple[float, List[int]]:
    """Pairwise swaps keep class sizes fixed."""
    a = gs.adjacency_float
    q = beta.shape[0]

    def value(labels: np.ndarray) -> float:
        onehot = np.eye(q)[labels]
        return float(np.sum((onehot.T @ a @ onehot) * beta)) / gs.n ** 2

    best_value, best = -np.inf, []
    for _ in range(restarts):
        size = sizes[int(rng.integers(len(sizes)))]
        labels = rng.permutation(np.repeat(np.arange(q), size))
        current = value(labels)
        improved = True
        while improved:
            improved = False
            for u, v in itertools.combinations(range(gs.n), 2):
                if labels[u] == labels[v]:
                    continue
                labels[u], labels[v] = labels[v], labels[u]
                candidate = value(labels)
                if candidate > current + 1e-12:
                    current, improved = candidate, True
                else:
                    labels[u], labels[v] = labels[v], labels[u]
        if current > best_value:
            best_value, best = current, labels.tolist()
    return best_value, best


@dataclass
class HomStar:
    value: float
    log_value: float
    maps: int


def hom_star(g: GraphLike, h_tilde: WeightedGraph) -> HomStar:
    """sum over balanced maps phi of prod over edges of beta~_phi(u)phi(v)."""
    gs = as_simple(g)
    q = h_tilde.n
    sizes = balanced_sizes(h_tilde.alpha, gs.n)
    _check_enumeration(q, gs.n, "hom_star")
    allowed = _allowed_codes(sizes, gs.n)
    eu, ev = _edge_arrays(gs)
    beta = np.asarray(h_tilde.beta, dtype=float)
    if (beta < 0).any():
        raise DomainError("hom* needs nonnegative edge weights")
    with np.errstate(divide="ignore"):
        log_beta = np.log(beta)

    def chunk(labels: np.ndarray):
        keep = _balanced_rows(labels, q, allowed)
        labels = labels[keep]
        if not labels.shape[0]:
            return 0.0, -np.inf, 0
        if eu.size:
            products = beta[labels[:, eu], labels[:, ev]].prod(axis=1)
            logs = log_beta[labels[:, eu], labels[:, ev]].sum(axis=1)
        else:
            products = np.ones(labels.shape[0])
            logs = np.zeros(labels.shape[0])
        return float(products.sum()), float(logsumexp(logs)), int(labels.shape[0])

    results = _scan(gs.n, q, chunk)
    total = float(sum(r[0] for r in results))
    log_total = float(logsumexp([r[1] for r in results]))
    return HomStar(total, log_total, int(sum(r[2] for r in results)))


# ---------------------------------------------------------------------------
# statistical physics
# ---------------------------------------------------------------------------

@dataclass
class PartitionFunction:
    log_z: float
    free_energy: float
    variant: PartitionVariant
    exact: bool = True
    log_z_stderr: float = 0.0

    @property
    def z(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_z))


def _energies(labels: np.ndarray, eu: np.ndarray, ev: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    return 2.0 * _edge_sums(labels, eu, ev, j) / n ** 2


def partition_functions(g: GraphLike, j: Sequence[Sequence[float]],
                        variant: PartitionVariant = PartitionVariant.HARD,
                        method: EstimationMethod = EstimationMethod.EXACT,
                        samples: Optional[int] = None, seed: Optional[int] = None) -> PartitionFunction:
    """Z = sum_phi exp(-E_phi) (hard) or sum_phi exp(-n E_phi) (meanfield); F = -ln Z / n.

    Sums are carried in log space. The Monte Carlo method samples uniform maps
    and rescales by q^n.
    """
    gs = as_simple(g)
    j = _symmetric(j, "J")
    variant = PartitionVariant(variant)
    method = EstimationMethod(method)
    q, n = j.shape[0], gs.n
    if n == 0:
        raise DomainError("partition functions need at least one node")
    weight = float(n) if variant is PartitionVariant.MEANFIELD else 1.0
    eu, ev = _edge_arrays(gs)
    if method is EstimationMethod.EXACT:
        _check_enumeration(q, n, "partition function")
        chunks = _scan(n, q, lambda labels: float(logsumexp(-weight * _energies(labels, eu, ev, j, n))))
        log_z = float(logsumexp(chunks))
        return PartitionFunction(log_z, -log_z / n, variant, True)
    if seed is None:
        raise DomainError("Monte Carlo partition functions need a seed")
    samples = samples or get_settings().mc_samples
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, q, size=(samples, n))
    exponents = -weight * _energies(labels, eu, ev, j, n)
    log_mean = float(logsumexp(exponents)) - log(samples)
    log_z = n * log(q) + log_mean
    w = np.exp(exponents - exponents.max())
    stderr = float(w.std(ddof=1) / (w.mean() * np.sqrt(samples))) if samples > 1 else float("inf")
    logger.info(f"✅ Monte Carlo log Z = {log_z:.6g} +- {stderr:.2g} from {samples} maps")
    return PartitionFunction(log_z, -log_z / n, variant, False, stderr)


def ground_state_energy(g: GraphLike, j: Sequence[Sequence[float]]) -> MulticutResult:
    """min over maps of E_phi; equals -mmcut(G, -J)."""
    gs = as_simple(g)
    j = _symmetric(j, "J")
    if gs.n == 0:
        return MulticutResult(0.0, [], True)
    _check_enumeration(j.shape[0], gs.n, "ground state energy")
    eu, ev = _edge_arrays(gs)

    def chunk(labels: np.ndarray):
        energies = _energies(labels, eu, ev, j, gs.n)
        i = int(np.argmin(energies))
        return float(energies[i]), labels[i].tolist()

    value, labels = min(_scan(gs.n, j.shape[0], chunk), key=lambda r: r[0])
    return MulticutResult(value, labels, True)


# ---------------------------------------------------------------------------
# hom-number relations
# ---------------------------------------------------------------------------

def log2_hom(g: GraphLike, h: WeightedGraph) -> float:
    value = hom_weighted(g, h)
    return float("-inf") if value <= 0 else log2(value)


def cut_hom_sandwich(g: GraphLike) -> Dict[str, float]:
    """maxcut(G) <= log2 hom(G, H) / n^2 <= maxcut(G) + 1/n for the two-node H with cross weight 2."""
    gs = as_simple(g)
    if gs.n == 0:
        raise DomainError("the sandwich needs at least one node")
    cut = maxcut(gs, Mode.EXACT).value
    middle = log2_hom(gs, CUT_HOM_H) / gs.n ** 2
    upper = cut + 1.0 / gs.n
    return {"maxcut": cut, "log2_hom": middle, "upper": upper,
            "holds": bool(cut - 1e-12 <= middle <= upper + 1e-12)}


def mcut_hom_gap(g: GraphLike, beta: Sequence[Sequence[float]]) -> Dict[str, float]:
    """log2 hom(G, H_exp) / n^2 against mmcut(G, beta) / 2, where H_exp has weights 2^beta.

    hom(G, H_exp) sums 2^(sum over edges of beta), so the gap lies in
    [0, log2(q) / n] exactly.
    """
    gs = as_simple(g)
    beta = _symmetric(beta, "beta")
    q = beta.shape[0]
    h_exp = WeightedGraph(np.ones(q), np.exp2(beta))
    cut = mmcut(gs, beta, Mode.EXACT).value
    middle = log2_hom(gs, h_exp) / gs.n ** 2
    gap = middle - cut / 2
    return {"mmcut": cut, "log2_hom": middle, "gap": gap, "bound": log2(q) / gs.n, "constant": gap * gs.n}


def rmcut_hom_gap(g: GraphLike, h: WeightedGraph) -> Dict[str, float]:
    """ln hom*(G, H~) / n^2 against rmcut(G, H) / 2, where H~ has weights exp(beta).

    The gap lies in [0, ln|S(G,H)| / n^2] exactly.
    """
    gs = as_simple(g)
    h_tilde = WeightedGraph(h.alpha, np.exp(h.beta))
    star = hom_star(gs, h_tilde)
    restricted = rmcut(gs, h, Mode.EXACT).value
    middle = star.log_value / gs.n ** 2
    gap = middle - restricted / 2
    return {"rmcut": restricted, "log_hom_star": middle, "gap": gap,
            "bound": log(star.maps) / gs.n ** 2, "constant": gap * gs.n}


def node_weight_shift(g: GraphLike, h: WeightedGraph, factor: float) -> float:
    """ln hom(G, c H) - ln hom(G, H) for node weights scaled by c; equals n ln c."""
    gs = as_simple(g)
    scaled = WeightedGraph(h.alpha * factor, h.beta)
    return log(hom_weighted(gs, scaled)) - log(hom_weighted(gs, h))


def density_gap_d(h: WeightedGraph) -> float:
    """D(H) = sum_ij alpha_i alpha_j / alpha_H^2 (1 - beta_ij / beta_max)."""
    beta_max = float(np.max(h.beta))
    if beta_max <= 0:
        raise DomainError("D(H) needs a positive edge weight")
    weights = np.outer(h.alpha, h.alpha) / h.alpha_total ** 2
    return float(np.sum(weights * (1.0 - h.beta / beta_max)))


def right_quantities(g: GraphLike, h: WeightedGraph) -> Dict[str, float]:
    """u(G, H) = ln hom(G, H) / n (-inf when hom = 0), D(H), and log2 hom(G, H_cut) / n^2."""
    gs = as_simple(g)
    if gs.n == 0:
        raise DomainError("right quantities need at least one node")
    hom = hom_weighted(gs, h)
    u = float("-inf") if hom <= 0 else log(hom) / gs.n
    return {"hom": hom, "u": u, "D": density_gap_d(h), "cut_hom": log2_hom(gs, CUT_HOM_H) / gs.n ** 2}


# ---------------------------------------------------------------------------
# graphon energies
# ---------------------------------------------------------------------------

@dataclass
class GraphonEnergy:
    value: float
    split: np.ndarray = field(repr=False)
    iterations: int = 0

    @property
    def is_lower_bound(self) -> bool:
        return True


def _transport_constraints(p: np.ndarray, alpha: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    m, q = p.size, alpha.size
    rows = []
    for a in range(m):
        row = np.zeros((m, q))
        row[a] = 1.0
        rows.append(row.ravel())
    for i in range(q - 1):
        row = np.zeros((m, q))
        row[:, i] = 1.0
        rows.append(row.ravel())
    return np.array(rows), np.concatenate([p, alpha[:-1]])


def _vertex(objective: np.ndarray, a_eq: np.ndarray, b_eq: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    result = linprog(-objective.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not result.success:
        raise InfeasibleBalanceError(f"no split of the blocks meets the class masses: {result.message}")
    return result.x.reshape(shape)


def energy_graphon(w, h: WeightedGraph, restarts: int = 8, seed: int = 0, max_iter: int = 500) -> GraphonEnergy:
    """E(W, H) for a step graphon: best split X (block a sends mass X_ai to class i).

    Frank-Wolfe ascent on f(X) = sum B_ab beta_ij X_ai X_bj over the
    transportation polytope (row sums p, column sums alpha), started from
    random vertices; the best value found is a lower bound.
    """
    p = np.asarray(w.p, dtype=float)
    b = np.asarray(w.B, dtype=float)
    alpha = np.asarray(h.alpha, dtype=float) / h.alpha_total
    beta = np.asarray(h.beta, dtype=float)
    shape = (p.size, alpha.size)
    a_eq, b_eq = _transport_constraints(p, alpha)

    def f(x: np.ndarray) -> float:
        return float(np.sum(b * (x @ beta @ x.T)))

    rng = np.random.default_rng(seed)
    starts = [np.outer(p, alpha)]
    starts += [_vertex(rng.standard_normal(shape), a_eq, b_eq, shape) for _ in range(restarts)]
    best = GraphonEnergy(-np.inf, starts[0])
    for x in starts:
        value = f(x)
        iterations = 0
        for iterations in range(1, max_iter + 1):
            grad = 2.0 * b @ x @ beta
            s = _vertex(grad, a_eq, b_eq, shape)
            d = s - x
            slope = float(np.sum(grad * d))
            if slope <= 1e-13:
                break
            curvature = f(d)
            step = 1.0 if curvature >= 0 else min(1.0, -slope / (2 * curvature))
            x = x + step * d
            value = f(x)
        if value > best.value:
            best = GraphonEnergy(value, x, iterations)
    return best
