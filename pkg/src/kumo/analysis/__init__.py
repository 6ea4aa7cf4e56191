from .graph import DomainGraph, Partition, build_domain_graph, graph_from_edges, louvain, modularity
from .signature import structure_signature
from .split import connected_components, split_environment, truth_connection_graph
from .stats import (
    ContingencyTable,
    chi_square_cdf,
    chi_square_independence,
    chi_square_sf,
    cramers_v,
    majority_correct,
    regularized_lower_gamma,
    structure_performance_test,
)

__all__ = [
    "ContingencyTable",
    "DomainGraph",
    "Partition",
    "build_domain_graph",
    "chi_square_cdf",
    "chi_square_independence",
    "chi_square_sf",
    "connected_components",
    "cramers_v",
    "graph_from_edges",
    "louvain",
    "majority_correct",
    "modularity",
    "regularized_lower_gamma",
    "split_environment",
    "structure_performance_test",
    "structure_signature",
    "truth_connection_graph",
]
