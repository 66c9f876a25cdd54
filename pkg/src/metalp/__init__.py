"""Link prediction toolkit: topological stacking, minimal GNNs and a meta-learner."""
from metalp.graph import (
    CandidatePairSet,
    Graph,
    HoldoutSplit,
    NestedSplit,
    ParseError,
    generate_variants,
    nested_split,
    parse_edge_list,
    read_edge_list,
    sample_negatives,
    sample_observed,
)

__version__ = "0.1.0"

__all__ = [
    "CandidatePairSet",
    "Graph",
    "HoldoutSplit",
    "NestedSplit",
    "ParseError",
    "generate_variants",
    "nested_split",
    "parse_edge_list",
    "read_edge_list",
    "sample_negatives",
    "sample_observed",
]
