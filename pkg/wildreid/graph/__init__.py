"""Match graph, identity propagation and per-individual diagnostics."""
from wildreid.graph.diagnostics import EdgeBreakdown, export_graph, individual_edge_breakdown
from wildreid.graph.matchgraph import (
    Conflict,
    GraphError,
    MatchGraph,
    PredictionSet,
    build_match_graph,
    propagate_identities,
)
from wildreid.graph.unionfind import UnionFind

__all__ = [
    "EdgeBreakdown", "export_graph", "individual_edge_breakdown",
    "Conflict", "GraphError", "MatchGraph", "PredictionSet", "build_match_graph", "propagate_identities",
    "UnionFind",
]
