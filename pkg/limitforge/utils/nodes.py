"""
Graph workflow nodes for the regularity run
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from limitforge.utils.energy import max_weighted_cut
from limitforge.utils.errors import LimitForgeError
from limitforge.utils.graphon import Graphon
from limitforge.utils.regularity import (
    SamplingOracle,
    build_reps,
    estimate_quotient,
    quotient,
    refine_fractional,
    regularity_quality,
    voronoi_partition,
)
from limitforge.utils.state import BackingKind, RegularityState

logger = logging.getLogger(__name__)


class RegularityReport(BaseModel):
    """JSON document written by `regularity run`."""

    success: bool
    error: Optional[str] = None
    backing: Optional[str] = None
    epsilon: float
    seed: int
    representatives: Optional[Dict[str, Any]] = None
    partition_sizes: Optional[List[int]] = None
    quality: Optional[Dict[str, Any]] = None
    quotient: Optional[Dict[str, Any]] = None
    maxcut: Optional[Dict[str, Any]] = None
    oracle_queries: int = 0
    execution_path: List[str] = []


def _fail(state: RegularityState, step: str, error: Exception) -> RegularityState:
    logger.error(f"❌ {step} failed: {error}")
    state["error_message"] = str(error)
    state["execution_path"].append(f"{step}_failed")
    return state


def initialize_state(state: RegularityState) -> RegularityState:
    """Fill defaults so nodes can assume every key exists."""
    for key in ("backing_kind", "oracle", "representatives", "partition", "quality", "quotient", "maxcut",
                "report", "error_message"):
        state.setdefault(key, None)
    state.setdefault("seed", 0)
    if "execution_path" not in state or state["execution_path"] is None:
        state["execution_path"] = []
    return state


def build_representatives_node(state: RegularityState) -> RegularityState:
    """Wrap the backing in an oracle and grow the representative set."""
    state = initialize_state(state)
    backing = state.get("backing")
    if backing is None:
        state["error_message"] = "No backing graph or graphon provided"
        state["execution_path"].append("build_representatives_failed")
        return state
    try:
        oracle = SamplingOracle(backing, seed=state["seed"])
        state["oracle"] = oracle
        state["backing_kind"] = BackingKind.GRAPHON if isinstance(backing, Graphon) else BackingKind.GRAPH
        reps = build_reps(oracle, state["epsilon"], state["seed"])
        state["representatives"] = reps
    except LimitForgeError as e:
        return _fail(state, "build_representatives", e)
    state["execution_path"].append("build_representatives")
    return state


def backing_decision(state: RegularityState) -> str:
    """Concrete graphs get a partition; graphon backings go straight to quotient estimation."""
    if state.get("error_message"):
        return "error_handling"
    if state.get("backing_kind") is BackingKind.GRAPH:
        return "graph"
    return "graphon"


def voronoi_partition_node(state: RegularityState) -> RegularityState:
    try:
        state["partition"] = voronoi_partition(state["oracle"], state["representatives"], state["epsilon"],
                                               seed=state["seed"] + 1)
    except LimitForgeError as e:
        return _fail(state, "voronoi_partition", e)
    logger.info(f"✅ Voronoi partition with {state['partition'].size} classes")
    state["execution_path"].append("voronoi_partition")
    return state


def assess_quality_node(state: RegularityState) -> RegularityState:
    """d_cut(G, G_P), class diameters and the exceptional set."""
    if state.get("error_message"):
        return state
    try:
        quality = regularity_quality(state["oracle"].graph, state["partition"], seed=state["seed"])
    except LimitForgeError as e:
        return _fail(state, "assess_quality", e)
    bound = (4 * state["epsilon"]) ** 0.25
    state["quality"] = {**quality.to_dict(), "target_bound": bound,
                        "within_bound": quality.cut_distance <= bound}
    state["execution_path"].append("assess_quality")
    return state


def estimate_quotient_node(state: RegularityState) -> RegularityState:
    """Exact quotient for a partitioned graph, sampled class densities otherwise."""
    if state.get("error_message"):
        return state
    try:
        if state.get("partition") is not None:
            h = quotient(state["oracle"].graph, state["partition"])
            source = "partition"
        else:
            h = estimate_quotient(state["oracle"], state["representatives"], state["epsilon"], state["seed"] + 17)
            source = "sampled"
    except LimitForgeError as e:
        return _fail(state, "estimate_quotient", e)
    state["quotient"] = {"alpha": h.alpha.tolist(), "beta": h.beta.tolist(), "source": source}
    state["execution_path"].append("estimate_quotient")
    return state


def maxcut_node(state: RegularityState) -> RegularityState:
    """Brute-force split of the quotient followed by fractional refinement."""
    if state.get("error_message"):
        return state
    alpha = np.asarray(state["quotient"]["alpha"])
    beta = np.asarray(state["quotient"]["beta"])
    try:
        split_value, mask = max_weighted_cut(np.outer(alpha, alpha) * beta)
    except LimitForgeError as e:
        return _fail(state, "maxcut", e)
    estimate, fractions = refine_fractional(alpha, beta, mask.astype(float))
    state["maxcut"] = {
        "estimate": float(max(estimate, split_value)),
        "split_value": float(split_value),
        "left": np.flatnonzero(mask).tolist(),
        "right": np.flatnonzero(~mask).tolist(),
        "fractions": fractions.tolist(),
    }
    state["execution_path"].append("maxcut")
    return state


def format_report_node(state: RegularityState) -> RegularityState:
    """Collect everything into a RegularityReport dict."""
    state = initialize_state(state)
    reps = state.get("representatives")
    partition = state.get("partition")
    oracle = state.get("oracle")
    state["execution_path"].append("format_report")
    report = RegularityReport(
        success=state.get("error_message") is None,
        error=state.get("error_message"),
        backing=state["backing_kind"].value if state.get("backing_kind") else None,
        epsilon=state["epsilon"],
        seed=state["seed"],
        representatives=reps.to_dict() if reps is not None else None,
        partition_sizes=partition.block_sizes().tolist() if partition is not None else None,
        quality=state.get("quality"),
        quotient=state.get("quotient"),
        maxcut=state.get("maxcut"),
        oracle_queries=int(oracle.queries) if oracle is not None else 0,
        execution_path=list(state["execution_path"]),
    )
    state["report"] = report.model_dump()
    if report.success:
        logger.info(f"✅ Regularity run finished: {' -> '.join(report.execution_path)}")
    return state
