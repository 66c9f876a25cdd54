"""Topological level-0 predictors: 8 global, 14 pair-level, 2 x 10 node-level."""
from .columns import (FEATURE_COLUMNS, GLOBAL_COLUMNS, NODE_COLUMNS, PAIR_COLUMNS,
                      SCHEMA_VERSION)
from .lowrank import LowRankContext, low_rank_context
from .matrix import FeatureMatrix, build_feature_matrix, feature_rows
from .pairs import PairFeatures, pair_features, pair_matrix
from .topology import (GlobalFeatures, NodeFeatures, NodeTable, degree_assortativity,
                       global_features, local_clustering, node_features, node_table,
                       pagerank, personalized_pagerank)

__all__ = [
    "FEATURE_COLUMNS", "GLOBAL_COLUMNS", "NODE_COLUMNS", "PAIR_COLUMNS", "SCHEMA_VERSION",
    "LowRankContext", "low_rank_context", "FeatureMatrix", "build_feature_matrix",
    "feature_rows", "PairFeatures", "pair_features", "pair_matrix", "GlobalFeatures",
    "NodeFeatures", "NodeTable", "degree_assortativity", "global_features",
    "local_clustering", "node_features", "node_table", "pagerank", "personalized_pagerank",
]
