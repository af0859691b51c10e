"""Linearized primary-source models and converter setpoint bookkeeping.

PV and wind models carry the published coefficient sets verbatim (valid at
T = 10 ms). Both nearly cancel at ``z = 1``: num(1) and den(1) are four to six
orders of magnitude below the individual coefficients, so their dc gains are
dominated by the printed rounding. The coefficients are kept as published.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .tf import LtiState, RationalZ, exact

log = logging.getLogger(__name__)

PUBLISHED_SAMPLE_TIME = Fraction(1, 100)

# descending powers of z: a_{p,4} .. a_{p,0} and b_{p,5} .. b_{p,0}
PV_NUM = ("0.4028", "-1.0303", "1.0041", "-0.3767", "8.4638e-5")
PV_DEN = ("1", "-2.3955", "2.0413", "-0.7444", "0.0985", "-3.575e-9")

# a_{w,6} .. a_{w,0} and b_{w,7} .. b_{w,0}
WIND_NUM = ("0.1943", "-1.1346", "2.7637", "-3.5947", "2.6328", "-1.0295", "0.01679")
WIND_DEN = ("1", "-6.4395", "17.7314", "-27.0496", "24.6770", "-13.4537", "4.0553", "-0.5208")

PLANT_KINDS = ("wind", "pv", "statcom")


class PlantSampleTimeWarning(UserWarning):
    pass


@dataclass
class PlantModel:
    kind: str
    tf: RationalZ
    state: LtiState = field(init=False)

    def __post_init__(self):
        if self.kind not in PLANT_KINDS:
            raise ValueError(f"unknown plant kind {self.kind!r}")
        self.state = LtiState(self.tf)

    def step(self, p_ctrl: float) -> float:
        return self.state.step(p_ctrl)

    def peek(self) -> float:
        return self.state.peek()

    def reset(self):
        self.state.reset()


def _published(kind, num, den, sample_time):
    T = exact(sample_time)
    if T != PUBLISHED_SAMPLE_TIME:
        warnings.warn(
            f"{kind} coefficients are only valid at T = 10 ms (got {float(T)} s)",
            PlantSampleTimeWarning,
            stacklevel=3,
        )
    return PlantModel(kind, RationalZ(num, den, T))


def make_pv_plant(sample_time=PUBLISHED_SAMPLE_TIME) -> PlantModel:
    return _published("pv", PV_NUM, PV_DEN, sample_time)


def make_wind_plant(sample_time=PUBLISHED_SAMPLE_TIME) -> PlantModel:
    return _published("wind", WIND_NUM, WIND_DEN, sample_time)


def make_statcom_plant(sample_time=PUBLISHED_SAMPLE_TIME) -> PlantModel:
    """Ideal transmission: output equals input in the same tick."""
    return PlantModel("statcom", RationalZ.constant(1, sample_time))


def make_plant(kind: str, sample_time=PUBLISHED_SAMPLE_TIME) -> PlantModel:
    return {"wind": make_wind_plant, "pv": make_pv_plant, "statcom": make_statcom_plant}[kind](
        sample_time
    )


@dataclass
class CapacityProfile:
    """Piecewise-constant reference power and upper limit of one unit (pu)."""

    p_ref: float
    p_max: float
    changes: list = field(default_factory=list)  # (tick, p_ref, p_max), sorted

    def __post_init__(self):
        self._check(self.p_ref, self.p_max)
        self.changes = sorted(self.changes, key=lambda c: c[0])
        for _, p_ref, p_max in self.changes:
            self._check(p_ref, p_max)

    @staticmethod
    def _check(p_ref, p_max):
        if p_ref < 0 or p_max < 0:
            raise ValueError("capacities must be non-negative")
        if p_max < p_ref:
            raise ValueError(f"p_max {p_max} below p_ref {p_ref}")

    def at(self, tick: int) -> tuple[float, float]:
        p_ref, p_max = self.p_ref, self.p_max
        for k, r, m in self.changes:
            if k > tick:
                break
            p_ref, p_max = r, m
        return p_ref, p_max


def to_absolute_setpoint(delta_p_conv: float, p_ref: float, p_max: float) -> tuple[float, bool]:
    """``p_conv = delta + p_ref`` clamped to ``[0, p_max]``; returns ``(p_conv, clamped)``."""
    p = delta_p_conv + p_ref
    if p < 0.0:
        log.debug("lower clamp: requested %.6g pu, delivered 0", p)
        return 0.0, True
    if p > p_max:
        log.debug("upper clamp: requested %.6g pu, delivered %.6g", p, p_max)
        return p_max, True
    return p, False
