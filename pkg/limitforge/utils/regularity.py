"""
Weak regularity through the similarity distance.

Nodes are reached only through a SamplingOracle. Distances d2 are estimated
from shared sketches: one sample Z of "probe" nodes and one sample W of
"witness" nodes serve every estimate of a round, so a node's profile
a2(u, z) ~ mean_w a(u, w) a(z, w) is a row vector and d2 estimates are
cityblock distances between profiles.

Sample sizes. With N outer and N inner samples, Hoeffding bounds each inner
mean to within eps/4 with failure 2exp(-N eps^2/8) and the outer mean to
within eps/4 likewise; a union bound over both profiles and the outer mean
gives failure <= 8exp(-N eps^2/8) <= eps for N = ceil(8 ln(8/eps) / eps^2).
"""

import logging
from dataclasses import dataclass, field
from math import ceil, log
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from limitforge.utils.config import get_settings
from limitforge.utils.cutmetric import StepKernel, cut_norm, cut_norm_upper
from limitforge.utils.energy import max_weighted_cut
from limitforge.utils.errors import DomainError, InvalidGraphError, RepresentativeCapExceeded, SizeBoundExceeded
from limitforge.utils.graph_core import GraphLike, Partition, SimpleGraph, WeightedGraph, as_simple
from limitforge.utils.graphon import Graphon, pair_uniforms, point_keys
from limitforge.utils.state import BackingKind, Mode

logger = logging.getLogger(__name__)

D2_EXACT_MAX = 5000
ADJACENCY_BLOCK = 1 << 20


def hoeffding_samples(epsilon: float) -> int:
    """N = ceil(8 ln(8/eps) / eps^2)."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return int(ceil(8 * log(8 / epsilon) / epsilon ** 2))


class SamplingOracle:
    """Uniform node sampling and adjacency queries over a graph or a graphon.

    Handles are integers issued by the oracle. For graph backings a handle
    stores the node it was drawn as; for graphon backings it stores the latent
    point, and adjacency between two handles is a fixed function of their
    points and the oracle seed, so repeated queries agree.
    """

    def __init__(self, backing: Union[GraphLike, Graphon], seed: int = 0):
        self.seed = int(seed)
        if isinstance(backing, Graphon):
            self.kind = BackingKind.GRAPHON
            self.graphon = backing
            self.graph = None
            self._points = np.empty((0, backing.dim))
            self._keys = np.empty(0, dtype=np.uint64)
        else:
            self.kind = BackingKind.GRAPH
            self.graph = as_simple(backing)
            self.graphon = None
            self._nodes = np.empty(0, dtype=np.int64)
        self.queries = 0

    @property
    def size(self) -> int:
        return int(self._nodes.size if self.kind is BackingKind.GRAPH else self._keys.size)

    @property
    def population(self) -> Optional[int]:
        return self.graph.n if self.graph is not None else None

    def sample_nodes(self, k: int, rng: np.random.Generator) -> np.ndarray:
        """k fresh handles, uniform over the backing population and independent of history."""
        start = self.size
        if self.kind is BackingKind.GRAPH:
            if self.graph.n == 0:
                raise DomainError("cannot sample from an empty graph")
            self._nodes = np.concatenate([self._nodes, rng.integers(0, self.graph.n, size=k)])
        else:
            points = self.graphon.sample_points(rng, k)
            self._points = np.concatenate([self._points, points])
            self._keys = np.concatenate([self._keys, point_keys(points)])
        return np.arange(start, start + k)

    def handles_for(self, nodes: Sequence[int]) -> np.ndarray:
        """Handles pinned to given nodes of a graph backing."""
        if self.kind is not BackingKind.GRAPH:
            raise DomainError("only graph-backed oracles can address nodes directly")
        nodes = np.asarray(nodes, dtype=np.int64)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= self.graph.n):
            raise InvalidGraphError(f"nodes must lie in 0..{self.graph.n - 1}")
        start = self.size
        self._nodes = np.concatenate([self._nodes, nodes])
        return np.arange(start, start + nodes.size)

    def node_of(self, handles: Sequence[int]) -> np.ndarray:
        if self.kind is not BackingKind.GRAPH:
            raise DomainError("graphon handles have no node index")
        return self._nodes[np.asarray(handles, dtype=np.int64)]

    def same_node(self, a: Sequence[int], b: Sequence[int]) -> np.ndarray:
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        if self.kind is BackingKind.GRAPH:
            return self._nodes[a][:, None] == self._nodes[b][None, :]
        return self._keys[a][:, None] == self._keys[b][None, :]

    def adjacency(self, a: Sequence[int], b: Sequence[int]) -> np.ndarray:
        """Boolean |a| x |b| adjacency between two handle lists."""
        a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        self.queries += a.size * b.size
        if self.kind is BackingKind.GRAPH:
            return self.graph.adj[np.ix_(self._nodes[a], self._nodes[b])]
        out = np.zeros((a.size, b.size), dtype=bool)
        if not a.size or not b.size:
            return out
        rows_per_block = max(1, ADJACENCY_BLOCK // b.size)
        for start in range(0, a.size, rows_per_block):
            block = a[start:start + rows_per_block]
            x = np.repeat(self._points[block], b.size, axis=0)
            y = np.tile(self._points[b], (block.size, 1))
            ka = np.repeat(self._keys[block], b.size)
            kb = np.tile(self._keys[b], block.size)
            values = self.graphon.evaluate(x, y)
            edges = (pair_uniforms(ka, kb, self.seed) < values) & (ka != kb)
            out[start:start + block.size] = edges.reshape(block.size, b.size)
        return out

    def induced_subgraph(self, handles: Sequence[int]) -> SimpleGraph:
        adj = self.adjacency(handles, handles)
        np.fill_diagonal(adj, False)
        return SimpleGraph(adj)


# ---------------------------------------------------------------------------
# similarity distance
# ---------------------------------------------------------------------------

def d2_matrix(g: GraphLike) -> np.ndarray:
    """All pairwise d2 distances: normalised cityblock distance between rows of A^2 / n."""
    gs = as_simple(g)
    if gs.n > D2_EXACT_MAX:
        raise SizeBoundExceeded("d2_exact", D2_EXACT_MAX, gs.n)
    if gs.n == 0:
        return np.zeros((0, 0))
    a = gs.adjacency_float
    a2 = (a @ a) / gs.n
    return cdist(a2, a2, metric="cityblock") / gs.n


def d2_exact(g: GraphLike, u: int, v: int) -> float:
    """d2(u,v) = E_z |a2(u,z) - a2(v,z)| with a2(x,y) = E_w a(x,w) a(y,w)."""
    gs = as_simple(g)
    if gs.n > D2_EXACT_MAX:
        raise SizeBoundExceeded("d2_exact", D2_EXACT_MAX, gs.n)
    a = gs.adjacency_float
    diff = (a[u] - a[v]) @ a / gs.n
    return float(np.abs(diff).mean())


class D2Sketch:
    """Shared probe/witness samples for one round of d2 estimates."""

    def __init__(self, oracle: SamplingOracle, epsilon: float, rng: np.random.Generator):
        required = hoeffding_samples(epsilon)
        cap = get_settings().d2_sample_cap
        self.capped = required > cap
        self.samples = min(required, cap)
        self.epsilon = epsilon
        self.oracle = oracle
        self.probes = oracle.sample_nodes(self.samples, rng)
        self.witnesses = oracle.sample_nodes(self.samples, rng)
        self._probe_witness = oracle.adjacency(self.probes, self.witnesses).astype(np.float64)

    def profiles(self, handles: Sequence[int]) -> np.ndarray:
        """Row i estimates a2(handles[i], z) over the probes."""
        rows = self.oracle.adjacency(handles, self.witnesses).astype(np.float64)
        return rows @ self._probe_witness.T / self.samples

    def distances(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        return cdist(np.atleast_2d(left), np.atleast_2d(right), metric="cityblock") / self.samples


def _warn_cap(sketch: D2Sketch) -> None:
    if sketch.capped:
        logger.warning(f"⚠️ d2 sample size for eps={sketch.epsilon:.4g} capped at d2_sample_cap="
                       f"{sketch.samples}; the per-estimate guarantee is weakened")


def d2_estimate(oracle: SamplingOracle, u: int, v: int, epsilon: float, seed: int) -> float:
    """Estimate D2(u, v) with |D2 - d2| <= eps with probability >= 1 - eps.

    Args:
        oracle: sampling oracle the handles u and v belong to
        u, v: oracle handles
        epsilon: accuracy and failure probability
        seed: seed for the probe and witness samples

    Returns:
        the nonnegative estimate
    """
    sketch = D2Sketch(oracle, epsilon, np.random.default_rng(seed))
    _warn_cap(sketch)
    if oracle.same_node([u], [v])[0, 0]:
        return 0.0
    profiles = sketch.profiles([u, v])
    return float(sketch.distances(profiles[0], profiles[1])[0, 0])


# ---------------------------------------------------------------------------
# representatives and classification
# ---------------------------------------------------------------------------

@dataclass
class RepresentativeSet:
    handles: List[int]
    epsilon: float
    distances: Dict[Tuple[int, int], float] = field(default_factory=dict)
    trace: List[Dict[str, Any]] = field(default_factory=list)
    halted_by: str = "rejections"
    size_cap: float = float("inf")

    def __len__(self) -> int:
        return len(self.handles)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "size": len(self.handles),
            "epsilon": self.epsilon,
            "handles": [int(h) for h in self.handles],
            "halted_by": self.halted_by,
            "steps": len(self.trace),
            "pairwise_estimates": {f"{i}-{j}": d for (i, j), d in sorted(self.distances.items())},
        }


def representative_cap(epsilon: float) -> float:
    """|R| <= 2^(2/eps^2)."""
    exponent = 2.0 / epsilon ** 2
    return float("inf") if exponent > 1000 else 2.0 ** exponent


def build_reps(oracle: SamplingOracle, epsilon: float, seed: int, max_size: Optional[int] = None) -> RepresentativeSet:
    """Grow a representative set from fresh uniform nodes.

    A candidate joins R iff every estimated distance to R exceeds eps/2; the
    estimates for a candidate have error eps/|R|. Growth stops after
    ceil(1/eps^2) consecutive rejections, or when R reaches the size cap
    (min of 2^(2/eps^2) and max_size).
    """
    if not 0 < epsilon <= 0.5:
        raise DomainError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    rng = np.random.default_rng(seed)
    patience = int(ceil(1 / epsilon ** 2))
    cap = min(representative_cap(epsilon), float(max_size) if max_size else float("inf"))
    reps = RepresentativeSet([], epsilon, size_cap=cap)
    sketch: Optional[D2Sketch] = None
    rep_profiles = np.empty((0, 0))
    warned = False
    rejections = 0
    step = 0
    logger.info(f"🔄 Building representatives (eps={epsilon}, patience={patience})")
    while rejections < patience:
        if len(reps) >= cap:
            reps.halted_by = "cap"
            break
        step += 1
        candidate = int(oracle.sample_nodes(1, rng)[0])
        if not reps.handles:
            reps.handles.append(candidate)
            reps.trace.append({"step": step, "candidate": candidate, "accepted": True, "min_estimate": None,
                               "size": 1})
            continue
        target = epsilon / len(reps)
        if sketch is None or sketch.epsilon != target:
            sketch = D2Sketch(oracle, target, rng)
            rep_profiles = sketch.profiles(reps.handles)
            if sketch.capped and not warned:
                _warn_cap(sketch)
                warned = True
        estimates = sketch.distances(sketch.profiles([candidate]), rep_profiles)[0]
        estimates[oracle.same_node([candidate], reps.handles)[0]] = 0.0
        accepted = bool((estimates > epsilon / 2).all())
        reps.trace.append({"step": step, "candidate": candidate, "accepted": accepted,
                           "min_estimate": float(estimates.min()), "size": len(reps) + int(accepted)})
        if accepted:
            index = len(reps)
            for j, d in enumerate(estimates.tolist()):
                reps.distances[(j, index)] = d
            reps.handles.append(candidate)
            rejections = 0
        else:
            rejections += 1
    logger.info(f"✅ {len(reps)} representatives after {step} samples ({reps.halted_by})")
    return reps


def _own_index(oracle: SamplingOracle, reps: RepresentativeSet, handles: Sequence[int]) -> np.ndarray:
    """Index of the representative each handle coincides with, -1 if none (lowest index wins)."""
    same = oracle.same_node(handles, reps.handles)
    return np.where(same.any(axis=1), same.argmax(axis=1), -1)


def classify_many(oracle: SamplingOracle, reps: RepresentativeSet, handles: Sequence[int], epsilon: float,
                  seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest representative (by estimated d2) for many handles, with the estimate matrix."""
    if not reps.handles:
        raise DomainError("cannot classify against an empty representative set")
    handles = np.asarray(handles, dtype=np.int64)
    if len(reps) == 1:
        return np.zeros(handles.size, dtype=np.int64), np.zeros((handles.size, 1))
    sketch = D2Sketch(oracle, epsilon, np.random.default_rng(seed))
    _warn_cap(sketch)
    estimates = sketch.distances(sketch.profiles(handles), sketch.profiles(reps.handles))
    choice = np.argmin(estimates, axis=1)
    own = _own_index(oracle, reps, handles)
    choice = np.where(own >= 0, own, choice)
    return choice.astype(np.int64), estimates


def classify(oracle: SamplingOracle, reps: RepresentativeSet, u: int, epsilon: float, seed: int = 0) -> int:
    """Index of the representative nearest to u; ties go to the lowest index.

    With probability >= 1 - eps the choice r satisfies
    d2(u, r) <= (1 + eps) min_r' d2(u, r') + 2 eps.
    """
    choice, _ = classify_many(oracle, reps, [u], epsilon, seed)
    return int(choice[0])


def voronoi_assignment(oracle: SamplingOracle, reps: RepresentativeSet, epsilon: float, seed: int = 0) -> np.ndarray:
    if oracle.kind is not BackingKind.GRAPH:
        raise DomainError("a Voronoi partition needs a concrete graph backing")
    handles = oracle.handles_for(range(oracle.graph.n))
    choice, _ = classify_many(oracle, reps, handles, epsilon, seed)
    return choice


def voronoi_partition(oracle: SamplingOracle, reps: RepresentativeSet, epsilon: float, seed: int = 0) -> Partition:
    """Partition of V by nearest representative; empty cells are dropped, order follows R."""
    return Partition.from_assignment(voronoi_assignment(oracle, reps, epsilon, seed))


# ---------------------------------------------------------------------------
# quotient and quality
# ---------------------------------------------------------------------------

def _indicator(partition: Partition) -> np.ndarray:
    s = np.zeros((partition.n, partition.size))
    s[np.arange(partition.n), partition.assignment()] = 1.0
    return s


def quotient(g: GraphLike, partition: Partition) -> WeightedGraph:
    """G_P: node weights |V_i|/n, edge weights d_G(V_i, V_j) (ordered pairs, diagonal included)."""
    gs = as_simple(g)
    if partition.n != gs.n:
        raise DomainError(f"partition covers {partition.n} nodes, graph has {gs.n}")
    sizes = partition.block_sizes().astype(float)
    if (sizes == 0).any():
        raise DomainError("partition has an empty block")
    s = _indicator(partition)
    edges = s.T @ gs.adjacency_float @ s
    return WeightedGraph(sizes / gs.n, edges / np.outer(sizes, sizes))


def _partition_kernel(g: SimpleGraph, partition: Partition) -> StepKernel:
    q = quotient(g, partition)
    assignment = partition.assignment()
    averaged = q.beta[np.ix_(assignment, assignment)]
    return StepKernel(np.full(g.n, 1.0 / g.n), g.adjacency_float - averaged)


def class_diameters(d2: np.ndarray, partition: Partition, removed: Optional[np.ndarray] = None) -> np.ndarray:
    keep = np.ones(partition.n, dtype=bool) if removed is None else ~removed
    out = np.zeros(partition.size)
    for i, block in enumerate(partition.blocks):
        members = [v for v in block if keep[v]]
        if len(members) > 1:
            out[i] = d2[np.ix_(members, members)].max()
    return out


def exceptional_set(d2: np.ndarray, partition: Partition) -> Tuple[float, np.ndarray]:
    """Greedy smallest delta with |S| <= delta n and every V_i minus S of d2-diameter <= delta.

    Nodes are removed in small batches, each time those with the largest
    distance to the rest of their class; delta is the best
    max(|S|/n, diameter) seen.
    """
    n = partition.n
    if n == 0:
        return 0.0, np.zeros(0, dtype=bool)
    assignment = partition.assignment()
    within = np.where(assignment[:, None] == assignment[None, :], d2, 0.0)
    removed = np.zeros(n, dtype=bool)
    spread = within.max(axis=1)
    best_delta = float(spread.max())
    best_removed = removed.copy()
    batch = max(1, n // 200)
    while removed.sum() < n - 1:
        order = np.argsort(np.where(removed, -1.0, spread))[::-1][:batch]
        removed[order] = True
        within[order, :] = 0.0
        within[:, order] = 0.0
        spread = within.max(axis=1)
        count = int(removed.sum())
        delta = max(count / n, float(spread.max()))
        if delta < best_delta:
            best_delta, best_removed = delta, removed.copy()
        if count / n >= best_delta:
            break
    return best_delta, best_removed


@dataclass
class RegularityQuality:
    cut_distance: float
    exact: bool
    upper_bound: float
    diameters: List[float]
    delta: float
    exceptional_size: int

    @property
    def delta_bound(self) -> float:
        return 24 * self.delta

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cut_distance": self.cut_distance,
            "cut_distance_exact": self.exact,
            "cut_distance_upper": self.upper_bound,
            "diameters": self.diameters,
            "delta": self.delta,
            "delta_bound": self.delta_bound,
            "exceptional_size": self.exceptional_size,
        }


def regularity_quality(g: GraphLike, partition: Partition, seed: int = 0) -> RegularityQuality:
    """d_cut(G, G_P), per-class d2 diameters and the greedy exceptional set.

    d_cut is exact up to cut_norm_exact_max nodes; beyond that it is a local
    search lower bound, and the upper bound is the smaller of the certified
    spectral bound and 24 delta.
    """
    gs = as_simple(g)
    kernel = _partition_kernel(gs, partition)
    d2 = d2_matrix(gs)
    delta, removed = exceptional_set(d2, partition)
    diameters = class_diameters(d2, partition).tolist()
    if gs.n <= get_settings().cut_norm_exact_max:
        result = cut_norm(kernel, Mode.EXACT)
        return RegularityQuality(result.value, True, result.value, diameters, delta, int(removed.sum()))
    result = cut_norm(kernel, Mode.HEURISTIC, seed=seed)
    upper = min(cut_norm_upper(kernel), 24 * delta)
    logger.warning(f"⚠️ {gs.n} nodes exceed cut_norm_exact_max; d_cut(G, G_P) is a lower bound")
    return RegularityQuality(result.value, False, max(upper, result.value), diameters, delta, int(removed.sum()))


# ---------------------------------------------------------------------------
# implicit max cut
# ---------------------------------------------------------------------------

MAXCUT_MIN_EPSILON = 0.15


def refine_fractional(alpha: np.ndarray, beta: np.ndarray, start: np.ndarray, sweeps: int = 200) -> Tuple[float, np.ndarray]:
    """Coordinate ascent on sum_ij a_i a_j b_ij x_i (1 - x_j) over x in [0,1]^m."""
    x = start.astype(float).copy()
    m = alpha.size
    weights = np.outer(alpha, alpha) * beta

    def value(y: np.ndarray) -> float:
        return float(y @ weights @ (1.0 - y))

    current = value(x)
    for _ in range(sweeps):
        improved = False
        for i in range(m):
            # f(x_i) = c x_i - w_ii x_i^2 + const
            others = weights[i] @ (1.0 - x) - weights[i, i] * (1.0 - x[i])
            linear = others - (weights[:, i] @ x - weights[i, i] * x[i]) + weights[i, i]
            quad = weights[i, i]
            candidate = np.clip(linear / (2 * quad), 0.0, 1.0) if quad > 0 else float(linear > 0)
            old = x[i]
            x[i] = candidate
            updated = value(x)
            if updated > current + 1e-15:
                current = updated
                improved = True
            else:
                x[i] = old
        if not improved:
            break
    return current, x


@dataclass
class MaxCutEstimate:
    estimate: float
    split_value: float
    left: List[int]
    right: List[int]
    fractions: List[float]
    quotient: WeightedGraph
    representatives: RepresentativeSet
    oracle: SamplingOracle = field(repr=False)
    epsilon: float = 0.2
    seed: int = 0

    def side(self, handle: int) -> bool:
        """True iff the node goes left: D2(u, R1) < D2(u, R2)."""
        if not self.right:
            return True
        if not self.left:
            return False
        sketch = D2Sketch(self.oracle, self.epsilon, np.random.default_rng(self.seed + 1))
        own = sketch.profiles([handle])
        reps = np.asarray(self.representatives.handles)
        d_left = sketch.distances(own, sketch.profiles(reps[self.left])).min()
        d_right = sketch.distances(own, sketch.profiles(reps[self.right])).min()
        return bool(d_left < d_right)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": self.estimate,
            "split_value": self.split_value,
            "left": self.left,
            "right": self.right,
            "fractions": self.fractions,
        }


def estimate_quotient(oracle: SamplingOracle, reps: RepresentativeSet, epsilon: float, seed: int) -> WeightedGraph:
    """Class weights and pairwise class densities from a classified uniform sample."""
    rng = np.random.default_rng(seed)
    m = len(reps)
    samples = min(hoeffding_samples(epsilon), get_settings().d2_sample_cap)
    handles = oracle.sample_nodes(samples, rng)
    labels, _ = classify_many(oracle, reps, handles, epsilon, seed=seed + 1)
    adj = oracle.adjacency(handles, handles).astype(float)
    np.fill_diagonal(adj, 0.0)
    s = np.zeros((samples, m))
    s[np.arange(samples), labels] = 1.0
    counts = s.sum(axis=0)
    edges = s.T @ adj @ s
    pairs = np.outer(counts, counts) - np.diag(counts)
    beta = np.divide(edges, pairs, out=np.zeros((m, m)), where=pairs > 0)
    alpha = np.maximum(counts / samples, 1e-12)
    return WeightedGraph(alpha / alpha.sum(), beta)


def maxcut_pipeline(oracle: SamplingOracle, epsilon: float, seed: int) -> MaxCutEstimate:
    """Max cut density through representatives, estimated quotient and brute force.

    The estimate is the fractional refinement of the best split of R (each
    class may be divided); the implicit cut itself is the split R = R1 u R2.
    """
    if epsilon < MAXCUT_MIN_EPSILON:
        raise DomainError(f"max-cut pipeline needs eps >= {MAXCUT_MIN_EPSILON}, got {epsilon}")
    cap = get_settings().max_representatives
    reps = build_reps(oracle, epsilon, seed, max_size=cap + 1)
    if len(reps) > cap:
        raise RepresentativeCapExceeded(f"representative set reached {len(reps)} > max_representatives={cap}")
    h = estimate_quotient(oracle, reps, epsilon, seed + 17)
    weights = np.outer(h.alpha, h.alpha) * h.beta
    split_value, mask = max_weighted_cut(weights)
    estimate, fractions = refine_fractional(h.alpha, h.beta, mask.astype(float))
    estimate = max(estimate, split_value)
    left = np.flatnonzero(mask).tolist()
    right = np.flatnonzero(~mask).tolist()
    logger.info(f"✅ Max-cut estimate {estimate:.4f} from {len(reps)} classes")
    return MaxCutEstimate(float(estimate), float(split_value), left, right, fractions.tolist(), h, reps,
                          oracle, epsilon, seed)
