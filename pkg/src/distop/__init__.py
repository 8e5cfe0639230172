"""Distributed persistence: invariants of point-cloud subsets, their
reconstruction power, and alignment by per-subset persistence losses."""

from .geometry import PointCloud, pairwise_distances, quasi_isometry_distortion, mean_pairwise_distortion
from .filtrations import FilteredComplex, RoundingGrid, cech_filtration, rips_filtration
from .persistence import EulerCurve, PersistenceDiagram, compute_persistence, euler_curve, rips_persistence
from .metrics import MetricConfig, bottleneck, diagram_distance, wasserstein
from .distributed import (
    DistributedInvariant,
    SubsetCollection,
    check_cover_closure,
    closure_completion,
    compute_distributed,
    sample_subsets,
)
from .reconstruction import (
    certify_alignment,
    distances_from_pair_curves,
    euler_reconstruct_pairs,
    quasi_isometry_bound,
    rounding_grid,
)
from .align import AlignConfig, align

__version__ = "0.1.0"
