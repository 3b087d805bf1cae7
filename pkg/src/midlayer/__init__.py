"""Independent sets in the middle two layers of the Boolean lattice."""

from .errors import (CacheError, InvariantError, MidlayerError, ParameterError,
                     ScaleError, ShapeError)
from .exact import (asymptotic_count_estimate, exact_restricted_sum, exact_Z,
                    expected_boundary, t_subset_lower_bound, xi_exact)
from .expansion import expansion_report, kp_check, predict_partition, term_structure
from .lattice import LayerGraph, Side, VertexSet, build_graph, middle_graph
from .polymers import Polymer, WeightParams, enumerate_polymers
from .sampler import (exact_hardcore_table, exact_nu_table, minority_defect_stats,
                      sample_mu_hat, structure_census, tv_distance)
from .ursell import IncompatibilityGraph, UrsellCache, ursell

__version__ = "0.1.0"
