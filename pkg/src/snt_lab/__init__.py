"""snt_lab: a deterministic simulation laboratory for comparing sequential
nested trial emulations against a single point trial.

The pipeline: calibrate per-visit outcome probabilities to two-year risk
targets, generate cohorts with per-visit potential outcomes, build the
single-point and the two sequential-nested index datasets, estimate
censoring-weighted and severity-standardized risk ratios, and score every
estimator against an exactly enumerated truth.
"""

from .config import (
    ConfigError,
    RunConfig,
    SCENARIO_IDS,
    ScenarioSpec,
    builtin_scenarios,
    load_config,
    validate,
)
from .designs import (
    DESIGN_CAL,
    DESIGN_SPT,
    DESIGN_TD,
    IndexRecord,
    IndexSet,
    TreatmentAssignment,
    assign_treatments,
    build_esnt_cal,
    build_esnt_td,
    build_spt,
    describe_replicate,
)
from .estimators import (
    AnalysisResult,
    analyze_replicate,
    censoring_weights,
    crude_rr,
    ipcw_km_risk,
    severity_distribution,
    standardized_rr,
)
from .harness import (
    EstimateRecord,
    MetricsRow,
    ReplicateResult,
    replicate_stream,
    run_replicate,
    run_scenario,
    summarize,
    summarize_descriptives,
)
from .hazards import (
    HazardSet,
    SolveReport,
    SolverInfeasible,
    residuals,
    solve,
    two_year_risk_high,
    two_year_risk_low,
)
from .population import (
    Cohort,
    Individual,
    TruthTable,
    cohort_true_rr,
    draw_cohort,
    draw_individual,
    enumerate_truth,
    event_time_under_pattern,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "Cohort",
    "ConfigError",
    "DESIGN_CAL",
    "DESIGN_SPT",
    "DESIGN_TD",
    "EstimateRecord",
    "HazardSet",
    "Individual",
    "IndexRecord",
    "IndexSet",
    "MetricsRow",
    "ReplicateResult",
    "RunConfig",
    "SCENARIO_IDS",
    "ScenarioSpec",
    "SolveReport",
    "SolverInfeasible",
    "TreatmentAssignment",
    "TruthTable",
    "analyze_replicate",
    "assign_treatments",
    "build_esnt_cal",
    "build_esnt_td",
    "build_spt",
    "builtin_scenarios",
    "censoring_weights",
    "cohort_true_rr",
    "crude_rr",
    "describe_replicate",
    "draw_cohort",
    "draw_individual",
    "enumerate_truth",
    "event_time_under_pattern",
    "ipcw_km_risk",
    "load_config",
    "replicate_stream",
    "residuals",
    "run_replicate",
    "run_scenario",
    "severity_distribution",
    "solve",
    "standardized_rr",
    "summarize",
    "summarize_descriptives",
    "two_year_risk_high",
    "two_year_risk_low",
    "validate",
]
