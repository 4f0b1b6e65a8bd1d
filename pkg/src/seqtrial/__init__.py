"""Group-sequential design, monitoring and simulation for time-to-event trials."""

from .config import ConfigError, TrialConfig, hypothetical_config, load_config, parse_config
from .design import (
    AnalysisPlan,
    BoundaryRow,
    BoundaryTable,
    Design,
    DesignSpec,
    compute_boundaries,
    fixed_design_events,
    hr_to_z,
    minimal_detectable_difference,
    power,
    required_max_events,
    spend,
    z_to_hr,
)
from .inference import StoppedTrialDatum, adjusted_ci, median_unbiased_hr, naive_hr_ci, stagewise_p
from .monitoring import (
    Decision,
    DelayedPrimaryError,
    HypothesisState,
    MonitoringError,
    ReportingLabel,
    TrialCourse,
    designate,
    recalc_interim_level,
    recalc_primary_level,
    record_analysis,
)
from .numerics import ContinuationRegion, exit_probability, stage_probabilities
from .report import TerminologyError, render_report
from .simulation import SimConfig, operating_characteristics, simulate_trials
from .timing import TrialModel, ccod_for_events, expected_events, predicted_schedule

__version__ = "0.1.0"

__all__ = [
    "AnalysisPlan",
    "BoundaryRow",
    "BoundaryTable",
    "ConfigError",
    "ContinuationRegion",
    "Decision",
    "DelayedPrimaryError",
    "Design",
    "DesignSpec",
    "HypothesisState",
    "MonitoringError",
    "ReportingLabel",
    "SimConfig",
    "StoppedTrialDatum",
    "TerminologyError",
    "TrialConfig",
    "TrialCourse",
    "TrialModel",
    "adjusted_ci",
    "ccod_for_events",
    "compute_boundaries",
    "designate",
    "exit_probability",
    "expected_events",
    "fixed_design_events",
    "hr_to_z",
    "hypothetical_config",
    "load_config",
    "median_unbiased_hr",
    "minimal_detectable_difference",
    "naive_hr_ci",
    "operating_characteristics",
    "parse_config",
    "power",
    "predicted_schedule",
    "recalc_interim_level",
    "recalc_primary_level",
    "record_analysis",
    "render_report",
    "required_max_events",
    "simulate_trials",
    "spend",
    "stage_probabilities",
    "stagewise_p",
    "z_to_hr",
]
