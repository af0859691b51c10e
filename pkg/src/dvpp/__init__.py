"""Discrete-time simulator for dynamic virtual power plants providing fast frequency support."""

from ._backend import BACKEND
from .control import (
    AdaptiveFactor,
    Allocator,
    DesiredBehavior,
    DynamicFactor,
    PidConfig,
    PidController,
    ResidualFactor,
    RstController,
    StaticFactor,
    adaptive_gains,
    build_desired,
    build_participation,
    design_pole_placement,
    matching_pid_step,
)
from .grid import FrequencyMeter, GovernorConfig, GridModel, SwingMode, TrackingMode
from .plants import CapacityProfile, PlantModel, make_plant, make_pv_plant, make_statcom_plant, make_wind_plant
from .tf import (
    LtiState,
    NearIntegratorError,
    RationalZ,
    SampleTimeMismatch,
    dc_gain,
    discretize_first_order,
    freq_response,
    impulse_response,
    poles,
    simulate,
)

__version__ = "0.1.0"
