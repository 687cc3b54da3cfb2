"""
Cut norm and cut-type distances.

Exact cut norms enumerate one side over block subsets and take the other side
by sign; heuristic values come from alternating best responses and are lower
bounds. Whenever an exact value is out of reach for an upper bound, the
certified bound min(l1, spectral) is used instead.
"""

import itertools
import logging
from dataclasses import dataclass, field
from math import lcm
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import svdvals

from limitforge.utils.config import get_settings
from limitforge.utils.errors import BracketInconsistencyError, DomainError, InvalidGraphError, SizeBoundExceeded
from limitforge.utils.graph_core import GraphLike, SimpleGraph, as_simple, blow_up, connected_catalog
from limitforge.utils.homcount import density
from limitforge.utils.state import DensityKind, Mode

logger = logging.getLogger(__name__)

ENUM_CHUNK = 1 << 16


@dataclass(frozen=True, eq=False)
class StepKernel:
    """Signed symmetric step function: block masses p, block values D."""

    p: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        D = np.array(self.D, dtype=float)
        if D.shape != (p.size, p.size):
            raise InvalidGraphError(f"kernel values must be {p.size}x{p.size}, got {D.shape}")
        if (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidGraphError(f"kernel masses must be nonnegative and sum to 1, got {p.sum()!r}")
        if not np.allclose(D, D.T, atol=1e-12):
            raise InvalidGraphError("kernel values must be symmetric")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "D", D)

    @classmethod
    def graph_difference(cls, g: GraphLike, h: GraphLike) -> "StepKernel":
        gs, hs = as_simple(g), as_simple(h)
        if gs.n != hs.n:
            raise DomainError(f"aligned cut distance needs equal node counts, got {gs.n} and {hs.n}")
        return cls(np.full(gs.n, 1.0 / gs.n), gs.adjacency_float - hs.adjacency_float)

    @property
    def m(self) -> int:
        return self.p.size

    def mass_matrix(self) -> np.ndarray:
        """M_ij = p_i p_j D_ij; a rectangle S x T integrates to sum over S x T of M."""
        return self.p[:, None] * self.D * self.p[None, :]


@dataclass
class CutNormResult:
    value: float
    S: List[int] = field(default_factory=list)
    T: List[int] = field(default_factory=list)
    exact: bool = True
    upper: Optional[float] = None

    @property
    def is_lower_bound(self) -> bool:
        return not self.exact


@dataclass(frozen=True, eq=False)
class FractionalOverlay:
    """Nonnegative n x n' matrix with row sums 1/n and column sums 1/n'."""

    X: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        n, n2 = X.shape
        if (X < 0).any():
            raise InvalidGraphError("overlay entries must be nonnegative")
        if not np.allclose(X.sum(axis=1), 1.0 / n, atol=1e-9) or not np.allclose(X.sum(axis=0), 1.0 / n2, atol=1e-9):
            raise InvalidGraphError("overlay marginals must be uniform")
        object.__setattr__(self, "X", X)

    @classmethod
    def from_blowup_alignment(cls, n: int, n2: int, order: Sequence[int]) -> "FractionalOverlay":
        """Overlay induced by matching node c of G(L/n) with node order[c] of G'(L/n')."""
        size = len(order)
        f1, f2 = size // n, size // n2
        X = np.zeros((n, n2))
        for c, d in enumerate(order):
            X[c // f1, int(d) // f2] += 1.0 / size
        return cls(X)


def _signed_best(rows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pos = np.where(rows > 0, rows, 0.0).sum(axis=1)
    neg = -np.where(rows < 0, rows, 0.0).sum(axis=1)
    return pos, neg


def _subset_bits(start: int, stop: int, m: int) -> np.ndarray:
    masks = np.arange(start, stop, dtype=np.int64)
    return ((masks[:, None] >> np.arange(m)) & 1).astype(float)


def _exact_cut_norm(M: np.ndarray) -> CutNormResult:
    m = M.shape[0]
    best_value, best_mask, best_sign = 0.0, 0, 1
    total = 1 << m
    for start in range(0, total, ENUM_CHUNK):
        bits = _subset_bits(start, min(start + ENUM_CHUNK, total), m)
        rows = bits @ M
        pos, neg = _signed_best(rows)
        i_pos, i_neg = int(np.argmax(pos)), int(np.argmax(neg))
        if pos[i_pos] > best_value + 1e-15:
            best_value, best_mask, best_sign = float(pos[i_pos]), start + i_pos, 1
        if neg[i_neg] > best_value + 1e-15:
            best_value, best_mask, best_sign = float(neg[i_neg]), start + i_neg, -1
    S = [i for i in range(m) if best_mask >> i & 1]
    row = M[S].sum(axis=0) if S else np.zeros(m)
    T = [j for j in range(m) if (row[j] > 0 if best_sign > 0 else row[j] < 0)]
    return CutNormResult(best_value, S, T, exact=True, upper=best_value)


def _alternating_cut_norm(M: np.ndarray, restarts: int, seed: int) -> CutNormResult:
    m = M.shape[0]
    rng = np.random.default_rng(seed)
    best = CutNormResult(0.0, [], [], exact=False)
    for sign in (1.0, -1.0):
        signed = sign * M
        for _ in range(restarts):
            s = rng.random(m) < 0.5
            value = -np.inf
            for _ in range(100):
                t = signed[s].sum(axis=0) > 0
                s_new = signed[:, t].sum(axis=1) > 0
                new_value = float(signed[np.ix_(s_new, t)].sum()) if s_new.any() and t.any() else 0.0
                if new_value <= value + 1e-15:
                    break
                s, value = s_new, new_value
            if value > best.value:
                t = signed[s].sum(axis=0) > 0
                best = CutNormResult(value, np.flatnonzero(s).tolist(), np.flatnonzero(t).tolist(), exact=False)
    return best


def cut_norm_upper(kernel: StepKernel) -> float:
    """Certified upper bound: min of the l1 mass and sigma_max(P^1/2 D P^1/2)."""
    M = kernel.mass_matrix()
    l1 = float(np.abs(M).sum())
    root = np.sqrt(kernel.p)
    spectral = float(svdvals(root[:, None] * kernel.D * root[None, :]).max()) if kernel.m else 0.0
    return min(l1, spectral)


def cut_norm(kernel: StepKernel, mode: Mode = Mode.EXACT, seed: int = 0,
             restarts: Optional[int] = None) -> CutNormResult:
    """Cut norm of a step kernel with witness block sets.

    Args:
        kernel: the step kernel
        mode: Mode.EXACT (m <= cut_norm_exact_max) or Mode.HEURISTIC (lower bound)
        seed: heuristic restarts seed
        restarts: heuristic restart count (settings default)

    Returns:
        CutNormResult with value, S, T and whether the value is exact
    """
    mode = Mode(mode)
    settings = get_settings()
    M = kernel.mass_matrix()
    if mode is Mode.EXACT:
        if kernel.m > settings.cut_norm_exact_max:
            raise SizeBoundExceeded("cut_norm_exact_max", settings.cut_norm_exact_max, kernel.m)
        return _exact_cut_norm(M)
    result = _alternating_cut_norm(M, restarts or settings.local_search_restarts, seed)
    result.upper = cut_norm_upper(kernel)
    return result


def auto_cut_norm(kernel: StepKernel, seed: int = 0) -> CutNormResult:
    """Exact when small enough, otherwise heuristic lower bound with certified upper bound."""
    if kernel.m <= get_settings().cut_norm_exact_max:
        return cut_norm(kernel, Mode.EXACT)
    logger.warning(f"⚠️ cut norm on {kernel.m} blocks exceeds cut_norm_exact_max; reporting a lower bound")
    return cut_norm(kernel, Mode.HEURISTIC, seed=seed)


def d_cut_aligned(g: GraphLike, h: GraphLike, mode: Optional[Mode] = None, seed: int = 0) -> CutNormResult:
    """max over S, T of |e_G(S,T) - e_H(S,T)| / n^2 (edges inside S and T counted twice)."""
    kernel = StepKernel.graph_difference(g, h)
    if mode is None:
        return auto_cut_norm(kernel, seed)
    return cut_norm(kernel, mode, seed)


def _certified_value(kernel: StepKernel) -> Tuple[float, bool]:
    if kernel.m <= get_settings().cut_norm_exact_max:
        return _exact_cut_norm(kernel.mass_matrix()).value, True
    return cut_norm_upper(kernel), False


# ---------------------------------------------------------------------------
# delta-hat: minimum over bijections
# ---------------------------------------------------------------------------

@dataclass
class AlignmentResult:
    value: float
    order: List[int]
    exact: bool
    upper_bound: bool = True


def _exact_delta_hat(a: np.ndarray, b: np.ndarray) -> AlignmentResult:
    n = a.shape[0]
    bits = _subset_bits(0, 1 << n, n)
    scale = 1.0 / (n * n)
    best_value, best_order = np.inf, list(range(n))
    for order in itertools.permutations(range(n)):
        idx = np.asarray(order)
        rows = bits @ ((a - b[np.ix_(idx, idx)]) * scale)
        pos, neg = _signed_best(rows)
        value = float(max(pos.max(), neg.max()))
        if value < best_value - 1e-15:
            best_value, best_order = value, list(order)
    return AlignmentResult(best_value, best_order, exact=True)


def _mismatch_rows(a: np.ndarray, b: np.ndarray, order: np.ndarray, rows: Sequence[int]) -> float:
    return float(sum(np.abs(a[r] - b[order[r], order]).sum() for r in rows))


def _anneal(a: np.ndarray, b: np.ndarray, start: np.ndarray, rng: np.random.Generator, steps: int) -> np.ndarray:
    """Simulated annealing on the number of disagreeing pairs under the alignment."""
    n = a.shape[0]
    order = start.copy()
    current = float(np.abs(a - b[np.ix_(order, order)]).sum())
    best, best_value = order.copy(), current
    temperature = 2.0
    decay = (0.01 / temperature) ** (1.0 / max(steps, 1))
    for _ in range(steps):
        x, y = rng.choice(n, size=2, replace=False)
        before = 2 * _mismatch_rows(a, b, order, (x, y)) - 2 * abs(a[x, y] - b[order[x], order[y]])
        order[x], order[y] = order[y], order[x]
        after = 2 * _mismatch_rows(a, b, order, (x, y)) - 2 * abs(a[x, y] - b[order[x], order[y]])
        delta = after - before
        if delta <= 0 or rng.random() < np.exp(-delta / temperature):
            current += delta
            if current < best_value:
                best, best_value = order.copy(), current
        else:
            order[x], order[y] = order[y], order[x]
        temperature *= decay
    return best


def _heuristic_delta_hat(g: SimpleGraph, h: SimpleGraph, seed: int, starts: Optional[List[np.ndarray]] = None) -> AlignmentResult:
    n = g.n
    a, b = g.adjacency_float, h.adjacency_float
    rng = np.random.default_rng(seed)
    candidates = [np.arange(n)]
    # align by degree rank
    rank_g = np.argsort(-g.degrees, kind="stable")
    rank_h = np.argsort(-h.degrees, kind="stable")
    degree_order = np.empty(n, dtype=np.int64)
    degree_order[rank_g] = rank_h
    candidates.append(degree_order)
    candidates.extend(starts or [])
    candidates.append(rng.permutation(n))
    steps = min(30 * n * n, 8000)
    annealed = [_anneal(a, b, start, rng, steps) for start in candidates]
    best = AlignmentResult(np.inf, list(range(n)), exact=False)
    for order in candidates + annealed:
        value, exact = _certified_value(StepKernel(np.full(n, 1.0 / n), a - b[np.ix_(order, order)]))
        if value < best.value:
            best = AlignmentResult(value, order.tolist(), exact=False)
    return best


def delta_hat(g: GraphLike, h: GraphLike, mode: Mode = Mode.EXACT, seed: int = 0) -> AlignmentResult:
    """min over bijections of d_cut_aligned; heuristic values are certified upper bounds."""
    gs, hs = as_simple(g), as_simple(h)
    if gs.n != hs.n:
        raise DomainError(f"delta-hat needs equal node counts, got {gs.n} and {hs.n}")
    mode = Mode(mode)
    limit = get_settings().delta_hat_exact_max
    if mode is Mode.EXACT:
        if gs.n > limit:
            raise SizeBoundExceeded("delta_hat_exact_max", limit, gs.n)
        return _exact_delta_hat(gs.adjacency_float, hs.adjacency_float)
    return _heuristic_delta_hat(gs, hs, seed)


# ---------------------------------------------------------------------------
# delta: certified bracket
# ---------------------------------------------------------------------------

@dataclass
class CutBracket:
    lower: float
    upper: float
    lower_witness: Optional[str] = None
    overlay: Optional[FractionalOverlay] = None
    upper_exact: bool = False


def overlay_cut_distance(g: GraphLike, h: GraphLike, overlay: FractionalOverlay) -> Tuple[float, bool]:
    """Cut distance of G and G' coupled by an overlay (exact when the support is small)."""
    a, b = as_simple(g).adjacency_float, as_simple(h).adjacency_float
    support = np.argwhere(overlay.X > 1e-15)
    masses = overlay.X[support[:, 0], support[:, 1]]
    masses = masses / masses.sum()
    D = a[np.ix_(support[:, 0], support[:, 0])] - b[np.ix_(support[:, 1], support[:, 1])]
    return _certified_value(StepKernel(masses, D))


def counting_lemma_lower(g: GraphLike, h: GraphLike, catalog: Optional[List[SimpleGraph]] = None) -> Tuple[float, str]:
    """max over F of |t(F,G) - t(F,G')| / |E(F)|."""
    best, witness = 0.0, "none"
    for f in catalog or connected_catalog(4):
        gap = abs(density(DensityKind.T, f, g) - density(DensityKind.T, f, h)) / f.num_edges
        if gap > best:
            best, witness = gap, f"n={f.n} edges={list(f.edges)}"
    return best, witness


def delta_cut(g: GraphLike, h: GraphLike, factor: int = 1, seed: int = 0) -> CutBracket:
    """Bracket lower <= delta_cut(G, G') <= upper.

    Upper: best alignment of the blow-ups to a common size lcm(n, n') * factor,
    evaluated on the induced overlay. Lower: counting lemma over connected
    graphs with at most 4 nodes.
    """
    gs, hs = as_simple(g), as_simple(h)
    if factor < 1:
        raise DomainError(f"blow-up factor must be positive, got {factor}")
    size = lcm(gs.n, hs.n) * factor
    big_g, big_h = blow_up(gs, size // gs.n), blow_up(hs, size // hs.n)
    if size <= get_settings().delta_hat_exact_max:
        alignment = delta_hat(big_g, big_h, Mode.EXACT)
    else:
        alignment = delta_hat(big_g, big_h, Mode.HEURISTIC, seed=seed)
    overlay = FractionalOverlay.from_blowup_alignment(gs.n, hs.n, alignment.order)
    overlay_value, overlay_exact = overlay_cut_distance(gs, hs, overlay)
    upper = min(alignment.value, overlay_value)
    lower, witness = counting_lemma_lower(gs, hs)
    if lower > upper + 1e-12:
        raise BracketInconsistencyError(f"delta_cut bracket inverted: lower {lower} > upper {upper}")
    return CutBracket(lower, upper, witness, overlay, upper_exact=overlay_exact and alignment.exact)


# ---------------------------------------------------------------------------
# sampling distance
# ---------------------------------------------------------------------------

@dataclass
class SamplingDistance:
    value: float
    truncation_error: float
    terms: Dict[int, float]


def d_sample(g: GraphLike, h: GraphLike, kmax: int, mode: Mode = Mode.EXACT,
             trials: int = 20000, seed: int = 0) -> SamplingDistance:
    """sum over k <= kmax of 2^-k d_tv(sigma_{G,k}, sigma_{G',k}); the tail is at most 2^-kmax."""
    from limitforge.utils.sampling import sigma

    gs, hs = as_simple(g), as_simple(h)
    if kmax < 1 or kmax > min(gs.n, hs.n):
        raise DomainError(f"kmax must lie in 1..{min(gs.n, hs.n)}, got {kmax}")
    mode = Mode(mode)
    terms: Dict[int, float] = {}
    for k in range(1, kmax + 1):
        if mode is Mode.EXACT and k <= 6:
            sg, sh = sigma(gs, k, Mode.EXACT), sigma(hs, k, Mode.EXACT)
        else:
            sg = sigma(gs, k, Mode.EMPIRICAL, trials=trials, seed=seed + k)
            sh = sigma(hs, k, Mode.EMPIRICAL, trials=trials, seed=seed + k)
        terms[k] = sg.tv_distance(sh)
    value = float(sum(2.0 ** -k * tv for k, tv in terms.items()))
    return SamplingDistance(value, 2.0 ** -kmax, terms)
