"""Forward-planning tactical deconfliction for lane-based airspace.

A rules-based control agent for sectors organised as fix-to-fix routes with
parallel deconfliction lanes. Every candidate clearance set is validated by
stochastic forward simulation (nominal, perturbed and loss-of-communication
rollouts) before it is committed; conflicts are resolved by a depth-limited
backtracking search over a ranked library of standard manoeuvres spliced
into condition-gated flight plans.
"""

__version__ = "0.1.0"

from .conflict import (
    ClassThresholds,
    ConflictClass,
    ConflictRecord,
    SeparationMinima,
    TechnicalSafetyRecord,
    check_separation,
    classify,
    compute_cpa,
    detect,
    earliest_conflict,
)
from .geometry import (
    AirspaceMap,
    Fix,
    GeometryError,
    Lane,
    LaneDesignation,
    Route,
    Sector,
    along_track,
    build_lanes,
    min_lane_spacing,
    point_at,
)
from .plans import (
    AirspacePlan,
    Axis,
    AxisConstraint,
    FlightPlan,
    Manoeuvre,
    PlannedAction,
    active_actions,
    build_nominal_plan,
    evaluate_condition,
    filter_by_axis_constraints,
    release_constraints,
    splice,
)
from .resolver import (
    DecisionTrace,
    Resolution,
    SearchParams,
    apply_strategy,
    attribute_cause,
    fallback,
    resolve_airspace,
)
from .runner import Episode, EpisodeResult, run_episode
from .scenario import Scenario, ScenarioError, load_scenario
from .strategies import StrategyLibrary, default_library, get_strategies
from .twin import (
    AircraftState,
    EnsembleConfig,
    Perturbation,
    RolloutSet,
    Trajectory,
    export_trajectories,
    rollout_counterfactual,
    simulate,
    simulate_ensemble,
    step,
)

__all__ = [name for name in dir() if not name.startswith("_")]
