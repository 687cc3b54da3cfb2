"""
Graphons: step graphons (exact densities) and analytic built-ins on abstract
point spaces (Monte Carlo densities), plus W-random graphs.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError

from limitforge.utils.config import get_settings
from limitforge.utils.errors import DomainError, InvalidGraphError, SizeBoundExceeded, UnknownNameError
from limitforge.utils.graph_core import GraphLike, SimpleGraph, WeightedGraph, as_simple
from limitforge.utils.state import EstimationMethod, PointSpace

logger = logging.getLogger(__name__)

MC_CHUNK = 50000


# ---------------------------------------------------------------------------
# deterministic pair hashing
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(values: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = np.asarray(values, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def point_keys(points: np.ndarray) -> np.ndarray:
    """64-bit key per latent point (row), from the raw float bits."""
    points = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    bits = points.view(np.uint64)
    key = np.zeros(points.shape[0], dtype=np.uint64)
    for column in range(bits.shape[1]):
        key = splitmix64(key ^ bits[:, column])
    return key


def pair_uniforms(keys_a: np.ndarray, keys_b: np.ndarray, seed: int) -> np.ndarray:
    """Symmetric uniforms in [0,1) that depend only on the two keys and the seed."""
    lo = np.minimum(keys_a, keys_b)
    hi = np.maximum(keys_a, keys_b)
    salt = splitmix64(np.array([seed], dtype=np.uint64))[0]
    mixed = splitmix64(lo ^ splitmix64(hi ^ salt))
    return (mixed >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


# ---------------------------------------------------------------------------
# graphon types
# ---------------------------------------------------------------------------

class Graphon(ABC):
    """Symmetric function into [0,1] on a probability space of latent points."""

    name: str = "graphon"
    point_space: PointSpace = PointSpace.INTERVAL
    dim: int = 1

    @abstractmethod
    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Values W(x_i, y_i) for point arrays of shape (m, dim)."""

    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random((size, self.dim))

    def __call__(self, x: Any, y: Any) -> float:
        xa = np.asarray(x, dtype=float).reshape(1, self.dim)
        ya = np.asarray(y, dtype=float).reshape(1, self.dim)
        return float(self.evaluate(xa, ya)[0])


class FunctionGraphon(Graphon):
    """Graphon given by a vectorised function of two point arrays."""

    def __init__(self, name: str, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 point_space: PointSpace = PointSpace.INTERVAL, dim: int = 1):
        self.name = name
        self._fn = fn
        self.point_space = point_space
        self.dim = dim

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(self._fn(np.atleast_2d(x), np.atleast_2d(y)), dtype=float)

    def __repr__(self) -> str:
        return f"FunctionGraphon({self.name}, {self.point_space.value})"


class StepGraphon(Graphon):
    """Block masses p and symmetric block values B in [0,1].

    Args:
        p: positive block masses summing to 1
        B: symmetric matrix of block values
    """

    point_space = PointSpace.INTERVAL
    dim = 1

    def __init__(self, p: Sequence[float], B: Sequence[Sequence[float]], name: str = "step"):
        p = np.array(p, dtype=float).reshape(-1)
        B = np.array(B, dtype=float)
        m = p.shape[0]
        if B.shape != (m, m):
            raise InvalidGraphError(f"block values must be {m}x{m}, got shape {B.shape}")
        if m == 0 or (p <= 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidGraphError(f"block masses must be positive and sum to 1, got sum {p.sum()!r}")
        if not np.allclose(B, B.T, atol=0.0):
            raise InvalidGraphError("block values must be symmetric")
        if (B < 0).any() or (B > 1).any():
            raise InvalidGraphError("block values must lie in [0, 1]")
        p.setflags(write=False)
        B.setflags(write=False)
        self.p = p
        self.B = B
        self.name = name
        self._edges = np.concatenate([[0.0], np.cumsum(p)])

    @property
    def m(self) -> int:
        return self.p.shape[0]

    def blocks_of(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.clip(np.searchsorted(self._edges, x, side="right") - 1, 0, self.m - 1)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.B[self.blocks_of(x), self.blocks_of(y)]

    def to_json(self) -> str:
        return StepGraphonDocument(p=self.p.tolist(), B=self.B.tolist()).model_dump_json()

    @classmethod
    def from_json(cls, text: str) -> "StepGraphon":
        try:
            doc = StepGraphonDocument.model_validate_json(text)
        except ValidationError as e:
            raise InvalidGraphError(f"invalid step graphon document: {e}") from e
        return cls(doc.p, doc.B)

    def __repr__(self) -> str:
        return f"StepGraphon(m={self.m})"


class StepGraphonDocument(BaseModel):
    p: List[float]
    B: List[List[float]]


def step_from_weighted(h: WeightedGraph) -> StepGraphon:
    """Blocks of mass alpha_i / alpha_G with values beta_ij."""
    if (h.beta < 0).any() or (h.beta > 1).any():
        raise InvalidGraphError("edge weights must lie in [0, 1] to define a graphon")
    p = h.alpha / h.alpha_total
    p = p / p.sum()
    return StepGraphon(p, h.beta)


def graph_step(g: GraphLike) -> StepGraphon:
    """W_G: n blocks of mass 1/n with the adjacency matrix as values."""
    gs = as_simple(g)
    return StepGraphon(np.full(gs.n, 1.0 / gs.n), gs.adjacency_float, name="W_G")


def random_step_graphon(rng: np.random.Generator, max_blocks: int = 4) -> StepGraphon:
    m = int(rng.integers(1, max_blocks + 1))
    p = rng.dirichlet(np.ones(m))
    p = p / p.sum()
    upper = rng.random((m, m))
    B = np.triu(upper) + np.triu(upper, 1).T
    return StepGraphon(p, B, name="random-step")


# ---------------------------------------------------------------------------
# built-ins
# ---------------------------------------------------------------------------

def _constant(p: float = 0.5) -> Graphon:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidGraphError(f"constant graphon needs p in [0, 1], got {p}")
    return StepGraphon([1.0], [[p]], name=f"constant({p})")


def _ua_limit() -> Graphon:
    return FunctionGraphon("ua_limit", lambda x, y: 1.0 - np.maximum(x[:, 0], y[:, 0]))


def _threshold() -> Graphon:
    return FunctionGraphon("threshold", lambda x, y: (x[:, 0] + y[:, 0] <= 1.0).astype(float))


def _pfx_limit() -> Graphon:
    def fn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return ((a[:, 0] < b[:, 0] * b[:, 1]) | (b[:, 0] < a[:, 0] * a[:, 1])).astype(float)

    return FunctionGraphon("pfx_limit", fn, PointSpace.SQUARE, dim=2)


def _pfx_naive() -> Graphon:
    def fn(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        top = np.maximum(x[:, 0], y[:, 0])
        out = np.zeros_like(top)
        nz = top > 0
        out[nz] = np.abs(x[nz, 0] - y[nz, 0]) / top[nz]
        return out

    return FunctionGraphon("pfx_naive", fn)


def _poly_sign(coefficients: Optional[Sequence[Sequence[float]]] = None) -> Graphon:
    """1 where sum c_ij x^i y^j > 0; c must be symmetric. Default p = x + y - 1."""
    c = np.array([[-1.0, 1.0], [1.0, 0.0]] if coefficients is None else coefficients, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or not np.allclose(c, c.T):
        raise InvalidGraphError("polynomial coefficient matrix must be square and symmetric")
    degree = c.shape[0]

    def fn(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        xp = x[:, 0:1] ** np.arange(degree)
        yp = y[:, 0:1] ** np.arange(degree)
        return (np.einsum("mi,ij,mj->m", xp, c, yp) > 0).astype(float)

    return FunctionGraphon("poly_sign", fn)


def first_differing_bit(x: np.ndarray, y: np.ndarray, bits: int = 52) -> np.ndarray:
    """1-based position of the first differing binary digit of x and y in [0,1); 0 if equal."""
    scale = float(1 << bits)
    xi = np.floor(np.asarray(x, dtype=float) * scale).astype(np.uint64)
    yi = np.floor(np.asarray(y, dtype=float) * scale).astype(np.uint64)
    diff = (xi ^ yi).astype(np.float64)
    _, exponent = np.frexp(diff)
    return np.where(diff > 0, bits - exponent + 1, 0)


def _bit_parity() -> Graphon:
    def fn(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        position = first_differing_bit(x[:, 0], y[:, 0])
        return ((position % 2) == 1).astype(float)

    return FunctionGraphon("bit_parity", fn, PointSpace.BITS)


def _half_bipartite() -> Graphon:
    return StepGraphon([0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]], name="half_bipartite")


BUILTINS: Dict[str, Callable[..., Graphon]] = {
    "constant": _constant,
    "ua_limit": _ua_limit,
    "threshold": _threshold,
    "pfx_limit": _pfx_limit,
    "pfx_naive": _pfx_naive,
    "poly_sign": _poly_sign,
    "bit_parity": _bit_parity,
    "half_bipartite": _half_bipartite,
}

# Closed-form densities used as targets.
KNOWN_DENSITIES: Dict[Tuple[str, str], float] = {
    ("ua_limit", "K2"): 1.0 / 3.0,
    ("ua_limit", "K3"): 1.0 / 15.0,
    ("threshold", "K2"): 0.5,
    ("pfx_limit", "K2"): 0.5,
    ("pfx_limit", "K3"): 1.0 / 6.0,
    ("pfx_naive", "K2"): 0.5,
    ("pfx_naive", "K3"): 5.0 / 36.0,
}


def builtin(name: str, **params: Any) -> Graphon:
    if name not in BUILTINS:
        raise UnknownNameError(f"unknown graphon '{name}'; known: {', '.join(sorted(BUILTINS))}")
    try:
        return BUILTINS[name](**params)
    except TypeError as e:
        raise InvalidGraphError(f"bad parameters for graphon '{name}': {e}") from e


def validate_graphon(w: Graphon, samples: int = 100000, seed: int = 0) -> Dict[str, float]:
    """Statistical symmetry and range check on random point pairs."""
    rng = np.random.default_rng(seed)
    x = w.sample_points(rng, samples)
    y = w.sample_points(rng, samples)
    forward = w.evaluate(x, y)
    backward = w.evaluate(y, x)
    return {
        "max_asymmetry": float(np.max(np.abs(forward - backward))),
        "min_value": float(forward.min()),
        "max_value": float(forward.max()),
    }


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def _step_contract(w: StepGraphon, f: SimpleGraph, induced: bool) -> float:
    k = f.n
    if k == 0:
        return 1.0
    limit = get_settings().hom_work_bound
    if float(w.m) ** k > limit:
        raise SizeBoundExceeded("hom_work_bound", limit, float(w.m) ** k, "exact step graphon density")
    operands: List[Any] = []
    for u in range(k):
        operands.extend([w.p, [u]])
    complement = 1.0 - w.B
    for u in range(k):
        for v in range(u + 1, k):
            if f.adj[u, v]:
                operands.extend([w.B, [u, v]])
            elif induced:
                operands.extend([complement, [u, v]])
    return float(np.einsum(*operands, [], optimize=True))


def _mc_density(f: SimpleGraph, w: Graphon, induced: bool, samples: int, seed: int) -> Tuple[float, float]:
    rng = np.random.default_rng(seed)
    k = f.n
    pairs = [(u, v) for u in range(k) for v in range(u + 1, k)]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        size = min(MC_CHUNK, samples - done)
        points = [w.sample_points(rng, size) for _ in range(k)]
        value = np.ones(size)
        for u, v in pairs:
            wv = w.evaluate(points[u], points[v])
            if f.adj[u, v]:
                value *= wv
            elif induced:
                value *= 1.0 - wv
        total += float(value.sum())
        total_sq += float((value ** 2).sum())
        done += size
    mean = total / samples
    variance = max(total_sq / samples - mean ** 2, 0.0) * samples / max(samples - 1, 1)
    return mean, float(np.sqrt(variance / samples))


def _density(f: GraphLike, w: Graphon, method: EstimationMethod, samples: Optional[int], seed: Optional[int],
             induced: bool) -> Tuple[float, float]:
    fs = as_simple(f)
    method = EstimationMethod(method)
    if method is EstimationMethod.EXACT:
        if not isinstance(w, StepGraphon):
            raise DomainError(f"exact densities need a step graphon, got {w!r}")
        return _step_contract(w, fs, induced), 0.0
    if seed is None:
        raise DomainError("Monte Carlo estimation needs a seed")
    samples = samples or get_settings().mc_samples
    return _mc_density(fs, w, induced, samples, seed)


def t_graphon(f: GraphLike, w: Graphon, method: EstimationMethod = EstimationMethod.EXACT,
              samples: Optional[int] = None, seed: Optional[int] = None) -> Tuple[float, float]:
    """t(F, W) as (estimate, stderr); exact estimates have stderr 0."""
    return _density(f, w, method, samples, seed, induced=False)


def t_ind_graphon(f: GraphLike, w: Graphon, method: EstimationMethod = EstimationMethod.EXACT,
                  samples: Optional[int] = None, seed: Optional[int] = None) -> Tuple[float, float]:
    """t_ind(F, W): edges contribute W, non-edges 1 - W."""
    return _density(f, w, method, samples, seed, induced=True)


# ---------------------------------------------------------------------------
# W-random graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WRandomGraph:
    graph: SimpleGraph
    points: np.ndarray


def w_random(n: int, w: Graphon, seed: int) -> WRandomGraph:
    """G(n, W): n latent points, edge ij iff pair_uniform(X_i, X_j, seed) < W(X_i, X_j)."""
    if n < 1:
        raise InvalidGraphError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    points = w.sample_points(rng, n)
    keys = point_keys(points)
    iu = np.triu_indices(n, 1)
    adj = np.zeros((n, n), dtype=bool)
    if iu[0].size:
        values = w.evaluate(points[iu[0]], points[iu[1]])
        adj[iu] = pair_uniforms(keys[iu[0]], keys[iu[1]], seed) < values
    adj |= adj.T
    logger.debug(f"Sampled {w!r} random graph on {n} nodes")
    return WRandomGraph(SimpleGraph(adj), points)

