from typing import Any, Dict, Union

from langgraph.graph import END, START, StateGraph

from limitforge.utils.graph_core import GraphLike
from limitforge.utils.graphon import Graphon
from limitforge.utils.nodes import (
    assess_quality_node,
    backing_decision,
    build_representatives_node,
    estimate_quotient_node,
    format_report_node,
    maxcut_node,
    voronoi_partition_node,
)
from limitforge.utils.state import RegularityState


def create_regularity_workflow():
    """Create the regularity workflow graph"""

    workflow = StateGraph(RegularityState)

    workflow.add_node("build_representatives", build_representatives_node)
    workflow.add_node("voronoi_partition", voronoi_partition_node)
    workflow.add_node("assess_quality", assess_quality_node)
    workflow.add_node("estimate_quotient", estimate_quotient_node)
    workflow.add_node("maxcut", maxcut_node)
    workflow.add_node("format_report", format_report_node)

    workflow.add_edge(START, "build_representatives")

    # Graph backings get a partition and diagnostics; graphons skip to sampling
    workflow.add_conditional_edges(
        "build_representatives",
        backing_decision,
        {
            "graph": "voronoi_partition",
            "graphon": "estimate_quotient",
            "error_handling": "format_report",
        }
    )

    workflow.add_edge("voronoi_partition", "assess_quality")
    workflow.add_edge("assess_quality", "estimate_quotient")
    workflow.add_edge("estimate_quotient", "maxcut")
    workflow.add_edge("maxcut", "format_report")
    workflow.add_edge("format_report", END)

    return workflow.compile()


def run_regularity(backing: Union[GraphLike, Graphon], epsilon: float, seed: int) -> Dict[str, Any]:
    """Invoke the workflow and return the report dict."""
    initial: RegularityState = {
        "backing": backing,
        "backing_kind": None,
        "epsilon": epsilon,
        "seed": seed,
        "oracle": None,
        "representatives": None,
        "partition": None,
        "quality": None,
        "quotient": None,
        "maxcut": None,
        "report": None,
        "execution_path": [],
        "error_message": None,
    }
    final = graph.invoke(initial)
    return final["report"]


# Create the graph instance
graph = create_regularity_workflow()
