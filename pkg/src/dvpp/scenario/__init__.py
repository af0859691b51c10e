from .compare import compare, variant, write_comparison
from .config import (
    KINDS,
    UNITS,
    CapacityChange,
    ConfigError,
    FrequencyRefStep,
    LoadStep,
    Scenario,
    load_preset,
    load_scenario,
    parse_scenario,
    preset_path,
)
from .metrics import Metrics, compute_metrics, recovery_time
from .runner import CSV_COLUMNS, SimulationError, Trace, run

__all__ = [
    "KINDS", "UNITS", "CSV_COLUMNS",
    "CapacityChange", "ConfigError", "FrequencyRefStep", "LoadStep", "Metrics", "Scenario",
    "SimulationError", "Trace",
    "compare", "compute_metrics", "load_preset", "load_scenario", "parse_scenario", "preset_path",
    "recovery_time", "run", "variant", "write_comparison",
]
