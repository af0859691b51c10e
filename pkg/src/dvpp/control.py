"""Desired DVPP behavior, its disaggregation, and local matching control.

The desired frequency-to-power response ``-D/(tau*s + 1)`` is split among
units with participation factors ``m_i``: static gains, first-order
low-passes (optionally with capacity-proportional, time-varying dc gains),
and one residual band-pass ``1/(tau_s*s + 1) - sum(m_i)``. Each wind/PV unit
then closes a local loop so that its output follows ``m_i * T_des``.

Reference models are realized as cascades (``T_des`` then ``mu_i`` then the
unity low-pass) so that a time-varying ``mu_i`` can be injected between the
two stages without resetting filter state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import _backend
from .tf import LtiState, RationalZ, discretize_first_order, exact, polyadd, polymul

SUM_TOL = 1e-9


# --------------------------------------------------------------------------
# desired behavior and participation factors


@dataclass(frozen=True)
class DesiredBehavior:
    droop: float
    tau: float
    realized: RationalZ


def build_desired(droop=6.5, tau=0.25, sample_time=0.01) -> DesiredBehavior:
    """``T_des(z)``: forward-Euler image of ``-droop/(tau*s + 1)``."""
    for name, v in (("droop", droop), ("tau", tau)):
        if not math.isfinite(float(v)) or float(v) <= 0:
            raise ValueError(f"{name} must be finite and > 0, got {v!r}")
    return DesiredBehavior(float(droop), float(tau), discretize_first_order(-exact(droop), tau, sample_time))


@dataclass(frozen=True)
class StaticFactor:
    mu: float


@dataclass(frozen=True)
class DynamicFactor:
    mu: float
    tau: float


@dataclass(frozen=True)
class AdaptiveFactor:
    """Low-pass factor whose dc gain follows the unit's capacity share.

    ``mu`` holds the share used to build the transfer function (usually the
    share at t = 0).
    """

    tau: float
    mu: float | None = None


@dataclass(frozen=True)
class ResidualFactor:
    tau: float


ParticipationSpec = Union[StaticFactor, DynamicFactor, AdaptiveFactor, ResidualFactor]


def _check_specs(specs: Sequence[ParticipationSpec]):
    residual = [s for s in specs if isinstance(s, ResidualFactor)]
    if len(residual) > 1:
        raise ValueError("at most one residual participation factor per DVPP")
    for s in specs:
        mu = getattr(s, "mu", None)
        if mu is not None and not (0.0 <= float(mu) <= 1.0):
            raise ValueError(f"participation gain {mu} outside [0, 1]")
        tau = getattr(s, "tau", None)
        if tau is not None and float(tau) <= 0 and not isinstance(s, StaticFactor):
            raise ValueError(f"time constant must be > 0, got {tau}")
    adaptive = [s for s in specs if isinstance(s, AdaptiveFactor)]
    fixed = [s for s in specs if isinstance(s, (StaticFactor, DynamicFactor))]
    if adaptive and any(float(s.mu) != 0.0 for s in fixed):
        raise ValueError("adaptive factors cannot be mixed with nonzero fixed gains")
    if adaptive and any(s.mu is None for s in adaptive):
        return
    total = sum(float(s.mu) for s in fixed + adaptive)
    if (fixed or adaptive) and abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"participation gains sum to {total!r}, expected 1")


def build_participation(specs: Sequence[ParticipationSpec], sample_time) -> list[RationalZ]:
    """Realize ``m_i(z)`` for every unit; the residual is built last."""
    _check_specs(specs)
    T = exact(sample_time)
    out: list[RationalZ | None] = []
    for s in specs:
        if isinstance(s, StaticFactor):
            out.append(RationalZ.constant(s.mu, T))
        elif isinstance(s, (DynamicFactor, AdaptiveFactor)):
            if s.mu is None:
                raise ValueError("adaptive factor needs an initial mu to be realized")
            out.append(discretize_first_order(s.mu, s.tau, T))
        else:
            out.append(None)
    for i, s in enumerate(specs):
        if isinstance(s, ResidualFactor):
            m = discretize_first_order(1, s.tau, T)
            for j, other in enumerate(out):
                if j != i and other is not None:
                    m = m - other
            out[i] = m
    return out


def adaptive_gains(p_ref: Sequence[float]) -> list[float]:
    """Capacity-proportional gains ``mu_i = p_ref_i / sum(p_ref)``."""
    vals = [float(p) for p in p_ref]
    if any(not math.isfinite(p) or p < 0 for p in vals):
        raise ValueError(f"capacities must be finite and >= 0, got {vals}")
    total = math.fsum(vals)
    if total <= 0:
        raise ValueError("all capacities are zero; no unit can participate")
    return [p / total for p in vals]


# --------------------------------------------------------------------------
# reference models


class UnitReference:
    """Desired local power ``m_i * T_des * delta_f`` for one non-residual unit."""

    def __init__(self, spec: ParticipationSpec, desired: DesiredBehavior):
        if isinstance(spec, ResidualFactor):
            raise TypeError("use ResidualReference for the residual unit")
        T = desired.realized.sample_time
        self.spec = spec
        self.mu = float(spec.mu) if spec.mu is not None else 0.0
        self.adaptive = isinstance(spec, AdaptiveFactor)
        self.tdes = LtiState(desired.realized)
        self.lowpass = (
            None if isinstance(spec, StaticFactor) else LtiState(discretize_first_order(1, spec.tau, T))
        )

    def step(self, delta_f: float) -> float:
        g = self.tdes.step(delta_f)
        x = self.mu * g
        return x if self.lowpass is None else self.lowpass.step(x)


class ResidualReference:
    """Fast-filtered desired aggregate minus the other units' desired powers."""

    def __init__(self, spec: ResidualFactor, desired: DesiredBehavior):
        T = desired.realized.sample_time
        self.spec = spec
        self.tdes = LtiState(desired.realized)
        self.fast = LtiState(discretize_first_order(1, spec.tau, T))

    def step(self, delta_f: float, others_desired: Sequence[float]) -> float:
        return self.fast.step(self.tdes.step(delta_f)) - sum(others_desired)


def _finite(x, what="delta_f"):
    if not math.isfinite(x):
        raise ValueError(f"non-finite {what}: {x!r}")


def desired_local_power(unit: UnitReference, delta_f_sample: float, mu: float | None = None) -> float:
    """One tick of a unit's reference model; ``mu`` refreshes an adaptive gain first."""
    _finite(delta_f_sample)
    if mu is not None:
        if not unit.adaptive:
            raise ValueError("only adaptive factors accept a refreshed mu")
        unit.mu = float(mu)
    return unit.step(delta_f_sample)


def statcom_desired_power(fast_filter_state: ResidualReference, others_desired: Sequence[float],
                          delta_f_sample: float) -> float:
    _finite(delta_f_sample)
    for v in others_desired:
        _finite(v, "desired power")
    return fast_filter_state.step(delta_f_sample, others_desired)


class Allocator:
    """Per-tick disaggregation over an ordered set of units.

    Non-residual units are stepped first (in order), the residual last.
    """

    def __init__(self, specs: Sequence[ParticipationSpec], desired: DesiredBehavior):
        _check_specs(specs)
        self.specs = list(specs)
        self.desired = desired
        self.refs = [
            ResidualReference(s, desired) if isinstance(s, ResidualFactor) else UnitReference(s, desired)
            for s in specs
        ]
        self.adaptive_idx = [i for i, s in enumerate(specs) if isinstance(s, AdaptiveFactor)]

    def mus(self) -> list[float]:
        return [0.0 if isinstance(r, ResidualReference) else r.mu for r in self.refs]

    def refresh(self, p_ref: Sequence[float]):
        if not self.adaptive_idx:
            return
        mus = adaptive_gains([p_ref[i] for i in self.adaptive_idx])
        for i, mu in zip(self.adaptive_idx, mus):
            self.refs[i].mu = mu

    def step(self, delta_f: float, p_ref: Sequence[float] | None = None) -> list[float]:
        _finite(delta_f)
        if p_ref is not None:
            self.refresh(p_ref)
        out = [0.0] * len(self.refs)
        others = []
        residual = None
        for i, r in enumerate(self.refs):
            if isinstance(r, ResidualReference):
                residual = i
                continue
            out[i] = r.step(delta_f)
            others.append(out[i])
        if residual is not None:
            out[residual] = self.refs[residual].step(delta_f, others)
        return out


# --------------------------------------------------------------------------
# matching controllers


def _check_sat(sat):
    lower, upper = sat
    if lower > upper:
        raise ValueError(f"inverted saturation interval [{lower}, {upper}]")
    return float(lower), float(upper)


@dataclass(frozen=True)
class PidConfig:
    """Parallel PID gains; the derivative path uses a first-order filter."""

    kp: float
    ki: float = 0.0
    kd: float = 0.0
    derivative_tau: float = 0.05

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "derivative_tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.ki < 0:
            raise ValueError("ki must be >= 0")
        if self.kd != 0 and self.derivative_tau <= 0:
            raise ValueError("derivative_tau must be > 0")


class PidController:
    """Discrete PID on ``e = p_des - p_fb`` with clamping anti-windup.

    Forward-Euler integrator and derivative filter. The integrator is frozen
    on every tick whose output is clamped.
    """

    def __init__(self, config: PidConfig, sample_time: float):
        self.config = config
        self.T = float(sample_time)
        if config.kd and config.derivative_tau < self.T / 2:
            raise ValueError("derivative filter unstable: derivative_tau < T/2")
        self.integral = 0.0
        self.d_state = 0.0
        self.last_sat = (-math.inf, math.inf)
        self.clamped = False

    def reset(self):
        self.integral = 0.0
        self.d_state = 0.0
        self.clamped = False

    def step(self, p_des: float, p_fb: float, sat=(-math.inf, math.inf), hold_integrator: bool = False) -> float:
        lower, upper = _check_sat(sat)
        c = self.config
        e = p_des - p_fb
        u = c.kp * e + self.integral
        if c.kd:
            u += c.kd / c.derivative_tau * (e - self.d_state)
            self.d_state += self.T / c.derivative_tau * (e - self.d_state)
        out = min(max(u, lower), upper)
        self.clamped = out != u
        if not (self.clamped or hold_integrator):
            self.integral += c.ki * self.T * e
        self.last_sat = (lower, upper)
        return out

    def transfer_function(self, sample_time=None) -> RationalZ:
        """``C(z)`` from error to output (unsaturated)."""
        T = exact(sample_time if sample_time is not None else self.T)
        c = self.config
        kp, ki, kd, td = exact(c.kp), exact(c.ki), exact(c.kd), exact(c.derivative_tau)
        C = RationalZ.constant(kp, T)
        if ki:
            C = C + RationalZ([ki * T], [1, -1], T)
        if kd:
            C = C + RationalZ([kd / td, -kd / td], [1, -1 + T / td], T)
        return C

    def closed_loop_poly(self, plant: RationalZ) -> list[Fraction]:
        C = self.transfer_function(plant.sample_time)
        return polyadd(polymul(C.den, plant.den), polymul(C.num, plant.num))


def matching_pid_step(loop: PidController, p_des: float, p_conv_feedback: float, sat) -> float:
    return loop.step(p_des, p_conv_feedback, sat)


class RstController:
    """Two-degree-of-freedom polynomial controller ``R u = T r - S y``.

    Realized as a single two-input transposed direct-form section so the
    closed loop stays well-conditioned even when ``R`` has roots outside
    the unit circle. Saturated outputs are fed back into the recursion.
    """

    def __init__(self, r, s, t, sample_time):
        r = [exact(c) for c in r]
        if r[0] == 0:
            raise ValueError("R must have a nonzero leading coefficient")
        lead = r[0]
        r = [c / lead for c in r]
        s = [exact(c) / lead for c in s]
        t = [exact(c) / lead for c in t]
        n = len(r) - 1
        if len(s) > n + 1 or len(t) > n + 1:
            raise ValueError("improper controller: deg S or deg T exceeds deg R")
        self.R, self.S, self.T_poly = tuple(r), tuple(s), tuple(t)
        pad = lambda p: [Fraction(0)] * (n + 1 - len(p)) + list(p)  # noqa: E731
        self._r = np.array([float(c) for c in r])
        self._s = np.array([float(c) for c in pad(s)])
        self._t = np.array([float(c) for c in pad(t)])
        self.z = np.zeros(n)
        self.sample_time = exact(sample_time)
        self.clamped = False

    def reset(self):
        self.z[:] = 0.0
        self.clamped = False

    def step(self, p_des: float, p_fb: float, sat=(-math.inf, math.inf)) -> float:
        lower, upper = _check_sat(sat)
        u, self.clamped = _backend.rst_step(self._t, self._s, self._r, self.z, float(p_des), float(p_fb),
                                            lower, upper)
        return float(u)

    def closed_loop_poly(self, plant: RationalZ) -> list[Fraction]:
        return polyadd(polymul(plant.den, self.R), polymul(plant.num, self.S))


def default_observer_poles(n: int) -> list[float]:
    return [round(0.4 - 0.05 * i, 10) for i in range(n)]


def design_pole_placement(plant: RationalZ, model_poles: Sequence[complex], observer_poles: Sequence[complex],
                          integral: bool = True) -> RstController:
    """Pole-placement matching controller with integral action.

    Solves ``A*(z-1)*R' + B*S = A_m*A_o`` and sets ``T = A_o*A_m(1)/B(1)``, so
    the reference-to-output map is ``B*A_m(1) / (A_m*B(1))`` with unit dc gain.
    Needs ``len(model_poles) + len(observer_poles) == 2*deg(A) + 1`` (with
    the integrator).
    """
    A = list(plant.den)
    B = list(plant.num)
    if integral:
        A = polymul(A, [Fraction(1), Fraction(-1)])
    n = len(A) - 1
    if len(model_poles) + len(observer_poles) != 2 * n - 1:
        raise ValueError(f"need {2 * n - 1} closed-loop poles, got {len(model_poles) + len(observer_poles)}")
    am = np.real_if_close(np.poly(np.asarray(model_poles, dtype=complex)))
    ao = np.real_if_close(np.poly(np.asarray(observer_poles, dtype=complex)))
    if np.iscomplexobj(am) or np.iscomplexobj(ao):
        raise ValueError("complex poles must come in conjugate pairs")
    acl = np.polymul(am, ao)
    Af = np.array([float(c) for c in A])
    Bf = np.array([float(c) for c in [Fraction(0)] * (len(A) - len(B)) + B])
    M = np.zeros((2 * n, 2 * n))
    for j in range(n):
        M[j:j + n + 1, j] = Af
        M[j:j + n + 1, n + j] = Bf
    sol = np.linalg.solve(M, acl)
    r_prime, s = sol[:n], sol[n:]
    r = np.polymul(r_prime, [1.0, -1.0]) if integral else r_prime
    b1 = float(sum(plant.num, Fraction(0)))
    if b1 == 0:
        raise ValueError("plant has a zero at z = 1; integral matching impossible")
    t = ao * (np.polyval(am, 1.0) / b1)
    return RstController(r.tolist(), s.tolist(), t.tolist(), plant.sample_time)
