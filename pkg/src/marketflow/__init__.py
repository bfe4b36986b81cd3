"""Deterministic simulation and calibration of competitiveness-driven
market-share dynamics.

Segment sizes evolve by three flows: obsolescence drains products whose
competitiveness and stickiness are low, refresh reallocates the drained
volume across segments, and de novo demand injects newly arriving
customers. Scores come from stamped attribute panels, are reshaped by
winner-take-all and psychology modifiers, and are turned into demand
shares by ratio, softmax, or redistribution allocators. On top of the
simulator sit a bound-constrained derivative-free fitter, a scenario file
format with located diagnostics, a CLI, and an HTTP service.
"""

from ._accel import BACKEND, JIT_ENABLED
from .allocation import (AllocationFlag, AllocationMatrix, AllocationVector,
                         allocate_ratio, allocate_redistribution, allocate_softmax,
                         allocate_wta, allocation_matrix, market_allocation)
from .behavior import (ModifiedScores, ResistanceKind, apply_psychology, apply_wta,
                       modify, resistance)
from .calibration import (FitResult, ParamSpec, default_param_specs, fit,
                          parse_param_specs, share_loss)
from .competitiveness import (CompetitivenessView, attribute_weights,
                              competitiveness_view, market_score, pairwise_score)
from .core import (Allocator, AttributePanel, BehaviorParams, DegenerateWeightsError,
                   DomainBoundError, IntegrationMethod, Interpolation, MarketState,
                   ModelError, ModifierOrder, PanelReport, RefreshMode, ScoreScale,
                   Trajectory, Violation, validate_panel)
from .dynamics import (FlowRates, IntegratorConfig, NewCustomerSeries,
                       competitiveness_series, new_entrant_rates, obsolescence_rate,
                       refresh_rates, rhs, simulate)
from .scenario import (Diagnostic, ScenarioDoc, ScenarioParseError, apply_overrides,
                       load_attribute_csv, load_observed_csv, load_run,
                       load_scenario_file, parse_scenario, parse_tree, persist_run,
                       read_trajectory_json, scenario_to_tree, trajectory_from_tree,
                       trajectory_to_tree, write_observed_csv, write_scenario,
                       write_trajectory)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "JIT_ENABLED", "__version__",
    "ScoreScale", "AttributePanel", "BehaviorParams", "MarketState", "Trajectory",
    "Interpolation", "Allocator", "ModifierOrder", "RefreshMode", "IntegrationMethod",
    "ModelError", "DomainBoundError", "DegenerateWeightsError",
    "PanelReport", "Violation", "validate_panel",
    "CompetitivenessView", "attribute_weights", "market_score", "pairwise_score",
    "competitiveness_view",
    "ModifiedScores", "ResistanceKind", "apply_wta", "resistance", "apply_psychology",
    "modify",
    "AllocationFlag", "AllocationVector", "AllocationMatrix", "allocate_ratio",
    "allocate_softmax", "allocate_redistribution", "allocate_wta", "market_allocation",
    "allocation_matrix",
    "FlowRates", "IntegratorConfig", "NewCustomerSeries", "obsolescence_rate",
    "refresh_rates", "new_entrant_rates", "rhs", "simulate", "competitiveness_series",
    "ParamSpec", "FitResult", "share_loss", "fit", "default_param_specs",
    "parse_param_specs",
    "ScenarioDoc", "Diagnostic", "ScenarioParseError", "parse_scenario", "parse_tree",
    "load_scenario_file", "scenario_to_tree", "write_scenario", "apply_overrides",
    "load_attribute_csv", "load_observed_csv", "write_observed_csv",
    "read_trajectory_json", "write_trajectory",
    "trajectory_to_tree", "trajectory_from_tree", "persist_run", "load_run",
]
