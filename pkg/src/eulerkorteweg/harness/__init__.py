"""Scenarios, diagnostics, configuration and command line for the reproduction runs."""
from .config import RunConfig, dump_config, load_config, parse_config
from .diagnostics import DiagnosticsSeries, consistency_error, relative_entropy_series
from .scenarios import (
    NondimensionalSet,
    NondimReport,
    Scenario,
    ktest_scenario,
    liu_gollub_nondimensionalize,
    liu_gollub_scenario,
    smooth_wave_scenario,
)

__all__ = [
    "DiagnosticsSeries",
    "NondimReport",
    "NondimensionalSet",
    "RunConfig",
    "Scenario",
    "consistency_error",
    "dump_config",
    "ktest_scenario",
    "liu_gollub_nondimensionalize",
    "liu_gollub_scenario",
    "load_config",
    "parse_config",
    "relative_entropy_series",
    "smooth_wave_scenario",
]
