"""Clustering by symmetric NMF guided by learned similarity and dissimilarity graphs."""
from .datasets import DataMatrix, load_dataset
from .graph import NeighborSlices, build_slices, combine, self_tuning_kernel, slices_from_data
from .metrics import acc, nmi
from .postcluster import ClusterAssignment, augment, spectral_cluster
from .simplex import project_simplex, solve_wp
from .solver import SolverConfig, SolverState, fit, initialize, monitored_objective

__all__ = [
    "ClusterAssignment", "DataMatrix", "NeighborSlices", "SolverConfig", "SolverState",
    "acc", "augment", "build_slices", "combine", "fit", "initialize", "load_dataset",
    "monitored_objective", "nmi", "project_simplex", "self_tuning_kernel",
    "slices_from_data", "solve_wp", "spectral_cluster",
]
