from enum import Enum
from typing import Any, Dict, List, Optional, TypedDict


class GraphFamily(Enum):
    ER = "er"
    TURAN = "turan"
    PALEY = "paley"
    THRESHOLD = "threshold"
    UNIFORM_ATTACHMENT = "uniform-attachment"
    PREFIX_ATTACHMENT = "prefix-attachment"
    GRID = "grid"
    COMPLETE = "complete"
    EMPTY = "empty"
    CYCLE = "cycle"
    PATH = "path"
    STAR = "star"
    COMPLETE_BIPARTITE = "complete-bipartite"
    PETERSEN = "petersen"
    TWO_CLIQUES = "two-cliques"
    PLANTED_PARTITION = "planted-partition"
    RANDOM_BOUNDED_DEGREE = "random-bounded-degree"


class CountKind(Enum):
    HOM = "hom"
    INJ = "inj"
    IND = "ind"


class DensityKind(Enum):
    T = "t"
    T_INJ = "t_inj"
    T_IND = "t_ind"


class SparseKind(Enum):
    S = "s"
    S_INJ = "s_inj"
    S_IND = "s_ind"


class TransformDirection(Enum):
    IND_FROM_INJ = "ind_from_inj"
    INJ_FROM_IND = "inj_from_ind"


class Mode(Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"
    LOCAL = "local"
    EMPIRICAL = "empirical"


class EstimationMethod(Enum):
    EXACT = "exact"
    MC = "mc"


class PointSpace(Enum):
    INTERVAL = "unit-interval"
    SQUARE = "unit-square"
    BITS = "bit-sequences"


class PartitionVariant(Enum):
    HARD = "hard"
    MEANFIELD = "meanfield"


class DistanceMetric(Enum):
    CUT = "cut"
    DELTA_HAT = "delta-hat"
    DELTA = "delta"
    SAMPLE = "sample"


class SampleKind(Enum):
    SUBGRAPH = "subgraph"
    BALL = "ball"


class BackingKind(Enum):
    GRAPH = "graph"
    GRAPHON = "graphon"


class RegularityState(TypedDict):
    """State for the regularity workflow."""
    backing: Any
    backing_kind: Optional[BackingKind]
    epsilon: float
    seed: int
    oracle: Any
    representatives: Optional[Dict[str, Any]]
    partition: Optional[Any]
    quality: Optional[Dict[str, Any]]
    quotient: Optional[Dict[str, Any]]
    maxcut: Optional[Dict[str, Any]]
    report: Optional[Dict[str, Any]]
    execution_path: List[str]
    error_message: Optional[str]
