"""Spectral computations on metric graphs with semi-infinite leads.

The package models a compact metric graph with leads attached, computes the
interior spectrum and Dirichlet-to-Neumann matrix of the compact part, solves
the full resolvent through an interior/lead splitting, and continues the
resolvent quadratic form analytically through the positive reals, where its
boundedness as Im(lambda) shrinks is the numerical signature of a limiting
absorption principle.
"""

from .graph_model import (
    Edge,
    GraphError,
    GraphFormatError,
    Lead,
    MetricGraph,
    VertexCondition,
    build_graph,
    conditions_equivalent,
    dirichlet_condition,
    format_graph,
    neumann_condition,
    normalize_boundary,
    parse_graph,
    parse_graph_file,
    standard_condition,
    validate_condition,
)
from .piecewise import PiecewisePoly, PolyPiece
from .interior import (
    EdgeForcing,
    InteriorSolution,
    InteriorSystem,
    NearSingular,
    assemble_interior,
    eval_fundamental,
    solve_interior,
    trace,
)
from .dtn import (
    DtNMatrix,
    RobinData,
    dtn_matrix,
    dtn_via_extension,
    extension_profiles,
    normal_derivative,
    robin_data,
)
from .spectrum import EigenvalueHit, ScanConfig, default_step, find_eigenvalues, smin_profile
from .halfline import (
    LAMBDA_FLOOR,
    LeadFunction,
    ThresholdError,
    branch_k,
    lead_inner_product,
    neumann_derivative_at_zero,
    neumann_resolvent_eval,
    outgoing_coefficient,
)
from .resolvent import (
    CompositeFunction,
    ContinuationPole,
    ResolventSample,
    continue_value,
    robin_coefficient,
    solve_full,
)
from .lap_analysis import (
    DEFAULT_EPS_LADDER,
    EmbeddedProbeResult,
    ExceptionalPoint,
    ExceptionalSet,
    ExceptionalWindowError,
    KIND_EMBEDDED,
    KIND_INTERIOR,
    KIND_POLE,
    LapSweep,
    embedded_probe,
    exceptional_scan,
    lap_sweep,
)

__version__ = "0.1.0"
