"""Intrinsic mesh coarsening with the intrinsic curvature error."""

from .coarsen import Coarsener, CoarsenConfig, apply_anisotropic_scaling, coarsen_to_count
from .flatten import evaluate_flatten, flatten_vertex, tentative_flatten
from .mapping import (Prolongation, RemovalRecord, Tracker, build_prolongation,
                      build_vector_prolongation, prolong, replay)
from .mesh import IntrinsicMesh, MeshError, build_from_positions
from .metric import ChannelState, init_channels, removal_cost, transfer_weights
from .removal import excise_flat_vertex, reduce_degree, remove_vertex
from .retriangulation import flip_edge, flip_to_delaunay, is_flippable

__version__ = "0.1.0"

__all__ = [
    "ChannelState", "CoarsenConfig", "Coarsener", "IntrinsicMesh", "MeshError",
    "Prolongation", "RemovalRecord", "Tracker", "apply_anisotropic_scaling",
    "build_from_positions", "build_prolongation", "build_vector_prolongation",
    "coarsen_to_count", "evaluate_flatten", "excise_flat_vertex", "flatten_vertex",
    "flip_edge", "flip_to_delaunay", "init_channels", "is_flippable", "prolong",
    "reduce_degree", "removal_cost", "remove_vertex", "replay", "tentative_flatten",
    "transfer_weights",
]
