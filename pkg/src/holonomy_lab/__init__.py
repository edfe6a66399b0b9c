"""Numerical laboratory for circle-diffeomorphism cocycles over a hyperbolic
toral automorphism: certified leaf holonomies, conjugacy construction by path
transport, cycle-weight obstructions, and invariant fiber metrics."""

__version__ = "0.1.0"

from ._core import KERNEL_IMPLEMENTATION
from .circle import (
    CircleDiffeo,
    CrDistance,
    DiffMetricConfig,
    NormReport,
    circle_dist,
    compose,
    derivative,
    dist_c0,
    dist_cr,
    invert,
    norm_cr,
)
from .cocycle import (
    BunchingReport,
    CocycleGenerator,
    ConjugatedGenerator,
    ConstantGenerator,
    DiffeoFamily,
    PerturbedRotationGenerator,
    RotationFieldGenerator,
    TrigPoly2,
    bunching_report,
    evaluate,
    synthesize_bounded,
    synthesize_cohomologous,
)
from .config import ExperimentConfig, load_config, save_config
from .conjugacy import (
    ConjugacyField,
    ConstantReduction,
    CycleWeight,
    PathWeight,
    ResidualReport,
    build_conjugacy,
    check_path_independence,
    conjugacy_residual,
    constant_reduction,
    cycle_weight,
    field_value_at,
    intertwining_residual,
    path_weight,
    pp_residual,
    transport_value,
)
from .errors import (
    ConfigInvalid,
    HolonomyLabError,
    MonotonicityLost,
    NoContraction,
    NotClosed,
    OrderTooHigh,
    OutOfLocalRange,
    PathIndependenceViolated,
    ToleranceNotMet,
    Unbounded,
)
from .holonomy import (
    HolonomyApprox,
    global_leaf_holonomy,
    holonomy_property_residuals,
    leaf_holonomy,
    stable_holonomy,
    unstable_holonomy,
)
from .metric import (
    MetricFamily,
    build_invariant_metric,
    metric_residuals,
    pushforward_metric,
)
from .runner import RunManifest, emit_report, run_experiment
from .torus import AnosovBase, Leg, SuPath, TorusPoint, bracket_cycle, build_su_path

__all__ = [
    "__version__",
    "KERNEL_IMPLEMENTATION",
    "AnosovBase",
    "BunchingReport",
    "CircleDiffeo",
    "CocycleGenerator",
    "ConfigInvalid",
    "ConjugacyField",
    "ConjugatedGenerator",
    "ConstantGenerator",
    "ConstantReduction",
    "CrDistance",
    "CycleWeight",
    "DiffMetricConfig",
    "DiffeoFamily",
    "ExperimentConfig",
    "HolonomyApprox",
    "HolonomyLabError",
    "Leg",
    "MetricFamily",
    "MonotonicityLost",
    "NoContraction",
    "NormReport",
    "NotClosed",
    "OrderTooHigh",
    "OutOfLocalRange",
    "PathIndependenceViolated",
    "PathWeight",
    "PerturbedRotationGenerator",
    "ResidualReport",
    "RotationFieldGenerator",
    "RunManifest",
    "SuPath",
    "ToleranceNotMet",
    "TorusPoint",
    "TrigPoly2",
    "Unbounded",
    "bracket_cycle",
    "build_conjugacy",
    "build_invariant_metric",
    "build_su_path",
    "bunching_report",
    "check_path_independence",
    "circle_dist",
    "compose",
    "conjugacy_residual",
    "constant_reduction",
    "cycle_weight",
    "derivative",
    "dist_c0",
    "dist_cr",
    "emit_report",
    "evaluate",
    "field_value_at",
    "global_leaf_holonomy",
    "holonomy_property_residuals",
    "intertwining_residual",
    "invert",
    "leaf_holonomy",
    "load_config",
    "metric_residuals",
    "norm_cr",
    "path_weight",
    "pp_residual",
    "pushforward_metric",
    "run_experiment",
    "save_config",
    "stable_holonomy",
    "synthesize_bounded",
    "synthesize_cohomologous",
    "transport_value",
    "unstable_holonomy",
]
