"""Semi-discrete optimal transport and the breakdown of OT quantiles.

Import the submodules directly, e.g. ``from sdot_robust.sdot import solve``;
the most used names are re-exported here.
"""

from .breakdown import BreakdownReport, breakdown_point, median_breakdown, min_subset_at_least
from .curves import CurveSpec, bdp_curve, emit_figure1, tail_mass
from .depth import DepthResult, depth, offset_map, tukey_median
from .measures import DiscreteMeasure, Kind, ReferenceMeasure
from .sdot import SolveConfig, TransportMap, ranks, solve

__version__ = "0.1.0"

__all__ = [
    "BreakdownReport", "CurveSpec", "DepthResult", "DiscreteMeasure", "Kind", "ReferenceMeasure",
    "SolveConfig", "TransportMap", "bdp_curve", "breakdown_point", "depth", "emit_figure1",
    "median_breakdown", "min_subset_at_least", "offset_map", "ranks", "solve", "tail_mass",
    "tukey_median",
]
