"""curveflow: planar curve shortening flow toolkit.

Polygonal curve shortening flow with conservation diagnostics, strip
multiplicities with line sweeps, grim-reaper barrier experiments, dyadic
exhaustion of rasterised compact sets, and a level set flow assembled from
independent component evolutions.
"""

from .curves import (
    Line,
    PolyCurve,
    Strip,
    curve_curve_intersections,
    curve_line_intersections,
    distances,
    hausdorff_distance,
    lipschitz_graph_check,
    load_curve,
    metrics,
    points_in_polygon,
    resample,
    save_curve,
    self_intersection_number,
)
from .errors import DegenerateConfigurationError, DomainError, InvalidInputError
from .flow import (
    FlowConfig,
    FlowTrajectory,
    GraphState,
    curvature_vectors,
    evolve,
    graph_evolve,
    length_dissipation_check,
)
from .levelset import (
    FateReport,
    LevelSetRun,
    LevelSetState,
    area_derivative_check,
    backward_convergence_metric,
    classify_fate,
    level_set_evolve,
    smoothness_diagnostics,
)
from .multiplicity import (
    MultiplicityCertificate,
    ScaleList,
    canonical_reparametrize,
    check_reparametrization_modulus,
    comparability_report,
    r_multiplicity,
    strip_multiplicity,
    tilde_strip_multiplicity,
)
from .rastergrid import (
    BoundCheck,
    ExhaustionResult,
    GridRegion,
    RasterSet,
    grid_exhaustion,
    local_connectivity_estimate,
    multiplicity_bound_check,
    rasterize_curves,
)
from .reapers import (
    ReaperParams,
    reaper_constants,
    reaper_eval,
    reaper_polyline,
    straightening_experiment,
    straightening_time,
    translating_residual,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
