"""Equivalent grid: forward-Euler swing equation and frequency measurement.

Angular frequency is per-unit with ``omega = 2*pi*f_pu``; at the default
100 Hz frequency base a 50 Hz grid sits at ``f_pu = 0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union


@dataclass(frozen=True)
class TrackingMode:
    """Speed control tightly tracks the frequency reference, ignoring power."""

    tau_track: float = 0.2


@dataclass(frozen=True)
class GovernorConfig:
    """PI speed governor gains; the defaults give a lightly damped ~10 s recovery."""

    kp: float = 0.5
    ki: float = 1.5


@dataclass(frozen=True)
class SwingMode:
    """Swing equation driven by the power balance, plus a PI speed governor."""

    governor: GovernorConfig | None = field(default_factory=GovernorConfig)


GridMode = Union[TrackingMode, SwingMode]


def omega_of(f_pu: float) -> float:
    return 2.0 * math.pi * f_pu


@dataclass
class GridModel:
    H: float = 2.0
    d: float = 1.5
    omega_ref: float = omega_of(0.5)
    mode: GridMode = field(default_factory=SwingMode)
    sample_time: float = 0.01
    omega: float = float("nan")
    f_ref: float = float("nan")
    gov_integral: float = 0.0

    def __post_init__(self):
        if self.H <= 0 or self.d <= 0:
            raise ValueError("H and d must be > 0")
        if self.sample_time <= 0:
            raise ValueError("sample_time must be > 0")
        if self.sample_time * self.d / (2 * self.H) >= 2:
            raise ValueError(
                f"forward-Euler swing step unstable: T*d/(2H) = {self.sample_time * self.d / (2 * self.H):g} >= 2"
            )
        if isinstance(self.mode, TrackingMode):
            if self.mode.tau_track <= 0 or self.sample_time / self.mode.tau_track >= 2:
                raise ValueError("tracking lag unstable: need tau_track > T/2")
        if math.isnan(self.omega):
            self.omega = self.omega_ref
        if math.isnan(self.f_ref):
            self.f_ref = self.omega_ref / (2 * math.pi)

    @property
    def euler_pole(self) -> float:
        if isinstance(self.mode, TrackingMode):
            return 1.0 - self.sample_time / self.mode.tau_track
        return 1.0 - self.sample_time * self.d / (2 * self.H)


def power_balance(gen_powers: Sequence[float], load_powers: Sequence[float]) -> float:
    return math.fsum(gen_powers) - math.fsum(load_powers)


def swing_step(grid: GridModel, delta_p_grid: float) -> float:
    """``omega(k+1) = omega(k) + T/(2H) * (dp + d*omega_ref - d*omega(k))``."""
    if not isinstance(grid.mode, SwingMode):
        raise ValueError("swing_step needs a grid in swing mode")
    grid.omega = grid.omega + grid.sample_time / (2 * grid.H) * (
        delta_p_grid + grid.d * grid.omega_ref - grid.d * grid.omega
    )
    return grid.omega


def tracking_step(grid: GridModel, f_ref_grid: float) -> float:
    """First-order lag of omega towards ``2*pi*f_ref``; power imbalance is ignored."""
    if not isinstance(grid.mode, TrackingMode):
        raise ValueError("tracking_step needs a grid in tracking mode")
    grid.f_ref = f_ref_grid
    grid.omega = grid.omega + grid.sample_time / grid.mode.tau_track * (omega_of(f_ref_grid) - grid.omega)
    return grid.omega


def governor_step(grid: GridModel, omega_meas: float) -> float:
    """PI speed governor output (pu power) on ``2*pi*f_ref - omega_meas``.

    ``grid.f_ref`` is the speed setpoint; it starts at the nominal frequency.
    """
    if not isinstance(grid.mode, SwingMode):
        raise ValueError("governor_step needs a grid in swing mode")
    gov = grid.mode.governor
    if gov is None:
        return 0.0
    e = omega_of(grid.f_ref) - omega_meas
    p = gov.kp * e + grid.gov_integral
    grid.gov_integral += gov.ki * grid.sample_time * e
    return p


def freq_deviation(omega_meas: float, omega_ref: float) -> float:
    """Frequency deviation in pu: ``(omega_meas - omega_ref) / (2*pi)``."""
    return (omega_meas - omega_ref) / (2 * math.pi)


class FrequencyMeter:
    """Emulates the grid acquisition: quantization and a sample-and-hold.

    ``resolution`` is in pu (1 mHz is 1e-5 pu at a 100 Hz base). A new value
    is latched only when an update instant of period ``update_period`` has
    elapsed since the last latch.
    """

    def __init__(self, resolution: float | None = None, update_period: float | None = None,
                 sample_time: float = 0.01):
        if resolution is not None and resolution <= 0:
            raise ValueError("resolution must be > 0")
        if update_period is not None and update_period <= 0:
            raise ValueError("update_period must be > 0")
        self.resolution = resolution
        self.update_period = update_period
        self.sample_time = sample_time
        self._held = 0.0
        self._last_tick = None

    def quantize(self, x: float) -> float:
        if self.resolution is None:
            return x
        return round(x / self.resolution) * self.resolution

    def read(self, delta_f: float, tick: int) -> float:
        if self.update_period is None:
            return self.quantize(delta_f)
        if self._last_tick is None or (tick - self._last_tick) * self.sample_time >= self.update_period - 1e-12:
            self._last_tick = tick
            self._held = self.quantize(delta_f)
        return self._held
