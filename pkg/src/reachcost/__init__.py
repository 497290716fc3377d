"""Inverse optimal control toolkit for planar arm reaching.

The package learns time-varying cost-function weights that explain recorded
reaching motions of a two-link planar arm, by repeatedly solving constrained
trajectory-optimization problems and re-weighting seven motion features so
the demonstration looks optimal among the generated alternatives.

Layers:

- :mod:`reachcost.arm` — rigid-body dynamics of the two-link arm.
- :mod:`reachcost.features` — trajectory container, per-step motion features,
  time-window plans, and windowed feature sums.
- :mod:`reachcost.doc` — constrained trajectory optimizer (augmented
  Lagrangian over single-shooting with an analytic adjoint gradient).
- :mod:`reachcost.irl` — iterative weight-learning loop with its convex
  update subproblem.
- :mod:`reachcost.demos` — synthetic demonstration generation, marker
  preprocessing, and on-disk formats.
- :mod:`reachcost.studies` — study orchestration (per-demo, per-subject,
  and pooled weight fits), evaluation reports, plot-ready exports.
- :mod:`reachcost.service` / :mod:`reachcost.cli` — HTTP service and the
  thin command-line client that talks to it.
"""

from .arm import ArmModel, State, reference_arm
from .demos import (
    Demonstration,
    MarkerFrames,
    generate_synthetic,
    joints_to_markers,
    markers_to_joints,
    read_demo,
    read_marker_csv,
    write_demo,
    write_marker_csv,
)
from .doc import DocProblem, DocSolution, SolverOptions, rollout, solve
from .errors import (
    Infeasible,
    LengthMismatch,
    ManifestIncomplete,
    NonFiniteData,
    NonRigid,
    NumericalFailure,
    ParseError,
    ReachcostError,
    SchemaVersionMismatch,
)
from .features import (
    FEATURE_NAMES,
    N_FEATURES,
    Trajectory,
    WeightSchedule,
    WindowedFeatures,
    WindowPlan,
    make_window_plan,
    plan_with_windows,
    total_cost,
    windowed_features,
)
from .irl import (
    IrlConfig,
    IrlResult,
    TrajectoryEntry,
    TrajectorySet,
    delta_w_subproblem,
    demo_probability,
    merit,
    run,
)
from .studies import (
    EvalReport,
    EvalRow,
    StudyOutcome,
    StudySpec,
    emit_plots,
    rmse,
    run_study,
)

__version__ = "0.1.0"

__all__ = [
    "ArmModel",
    "State",
    "reference_arm",
    "Demonstration",
    "MarkerFrames",
    "generate_synthetic",
    "joints_to_markers",
    "markers_to_joints",
    "read_demo",
    "read_marker_csv",
    "write_demo",
    "write_marker_csv",
    "DocProblem",
    "DocSolution",
    "SolverOptions",
    "rollout",
    "solve",
    "Infeasible",
    "LengthMismatch",
    "ManifestIncomplete",
    "NonFiniteData",
    "NonRigid",
    "NumericalFailure",
    "ParseError",
    "ReachcostError",
    "SchemaVersionMismatch",
    "FEATURE_NAMES",
    "N_FEATURES",
    "Trajectory",
    "WeightSchedule",
    "WindowedFeatures",
    "WindowPlan",
    "make_window_plan",
    "plan_with_windows",
    "total_cost",
    "windowed_features",
    "IrlConfig",
    "IrlResult",
    "TrajectoryEntry",
    "TrajectorySet",
    "delta_w_subproblem",
    "demo_probability",
    "merit",
    "run",
    "EvalReport",
    "EvalRow",
    "StudyOutcome",
    "StudySpec",
    "emit_plots",
    "rmse",
    "run_study",
    "__version__",
]
