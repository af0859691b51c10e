"""Fixed-step closed-loop execution of one scenario.

Per tick: apply events, measure frequency, allocate desired powers, run the
matching controllers, step the plants, clamp absolute setpoints, then close
the power balance and advance the grid to the next tick.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..control import Allocator, PidController, build_desired, design_pole_placement
from ..grid import (
    FrequencyMeter,
    GridModel,
    SwingMode,
    TrackingMode,
    freq_deviation,
    governor_step,
    omega_of,
    power_balance,
    swing_step,
    tracking_step,
)
from ..plants import make_plant, to_absolute_setpoint
from .config import UNITS, CapacityChange, FrequencyRefStep, LoadStep, Scenario

CSV_COLUMNS = (
    "t_s", "delta_f_pu",
    "p_des_w", "p_des_p", "p_des_s",
    "p_conv_w", "p_conv_p", "p_conv_s",
    "dp_pcc", "dp_grid", "p_load",
    "clamp_w", "clamp_p", "clamp_s",
)


class SimulationError(RuntimeError):
    def __init__(self, tick: int, signal: str, value: float):
        self.tick, self.signal, self.value = tick, signal, value
        super().__init__(f"non-finite {signal} = {value!r} at tick {tick}")


@dataclass
class Trace:
    """Sampled signals of one run; ``p_conv`` holds delivered deviations."""

    name: str
    kind: str
    sample_time: float
    t: np.ndarray
    delta_f: np.ndarray          # measured, as fed to the DVPP
    delta_f_true: np.ndarray
    omega: np.ndarray
    p_des: np.ndarray            # (n, 3)
    p_ctrl: np.ndarray           # (n, 3) plant inputs
    p_conv: np.ndarray           # (n, 3) delivered deviations
    p_conv_abs: np.ndarray       # (n, 3) absolute converter powers
    p_ref: np.ndarray            # (n, 3)
    p_max: np.ndarray            # (n, 3)
    mu: np.ndarray               # (n, 3)
    dp_pcc: np.ndarray
    dp_grid: np.ndarray
    p_load: np.ndarray
    clamp: np.ndarray            # (n, 3) bool
    event_ticks: tuple = ()
    desired_aggregate: np.ndarray = field(default=None)

    def __len__(self):
        return self.t.shape[0]

    def column(self, name: str) -> np.ndarray:
        if name in ("t_s",):
            return self.t
        if name == "delta_f_pu":
            return self.delta_f
        for prefix, arr in (("p_des_", self.p_des), ("p_conv_", self.p_conv), ("clamp_", self.clamp)):
            if name.startswith(prefix):
                return arr[:, "wps".index(name[-1])]
        return {"dp_pcc": self.dp_pcc, "dp_grid": self.dp_grid, "p_load": self.p_load}[name]

    def to_csv(self) -> str:
        cols = []
        for name in CSV_COLUMNS:
            col = self.column(name)
            cols.append(col.astype(int).tolist() if col.dtype == bool else col.tolist())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(zip(*cols))
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        return path


def build_controller(unit, plant_tf, sample_time):
    spec = unit.controller
    if spec.type == "pid":
        return PidController(spec.pid, sample_time)
    if spec.type == "pole_placement":
        return design_pole_placement(plant_tf, spec.model_poles, spec.observer_poles)
    return None


class _EnergyBudget:
    """Net delivered energy of the STATCOM kept within ``[-E, E]``."""

    def __init__(self, energy, T):
        self.energy, self.T, self.used = energy, T, 0.0

    def limit(self, p):
        nxt = self.used + p * self.T
        if nxt > self.energy:
            p = (self.energy - self.used) / self.T
        elif nxt < -self.energy:
            p = (-self.energy - self.used) / self.T
        return p

    def commit(self, p):
        self.used += p * self.T


def _check(tick, name, value):
    if not math.isfinite(value):
        raise SimulationError(tick, name, value)


def run(scenario: Scenario, n_ticks: int | None = None) -> Trace:
    """Simulate ``scenario``; ``n_ticks`` truncates the horizon."""
    T = scenario.sample_time
    n = scenario.n_ticks if n_ticks is None else int(n_ticks)
    if n <= 0:
        raise ValueError("nothing to simulate")
    kind = scenario.participation

    desired = build_desired(scenario.droop, scenario.tau, T)
    allocator = Allocator(scenario.participation_specs(kind), desired)
    plants = [make_plant(u.name, T) for u in scenario.units]
    controllers = [build_controller(u, p.tf, T) for u, p in zip(scenario.units, plants)]
    statcom = scenario.unit("statcom")
    budget = _EnergyBudget(statcom.energy, T) if statcom.energy is not None else None

    g = scenario.grid
    omega_nom = omega_of(g.f_nominal_pu)
    mode = TrackingMode(g.tau_track) if g.mode == "tracking" else SwingMode(g.governor)
    grid = GridModel(H=g.H, d=g.d, omega_ref=omega_nom, mode=mode, sample_time=T)
    meter = FrequencyMeter(scenario.resolution, scenario.update_period, T)

    p_ref = [u.p_ref for u in scenario.units]
    p_max = [u.p_max for u in scenario.units]
    load = scenario.base_load
    f_ref = g.f_nominal_pu
    events = sorted(scenario.events, key=lambda e: e.tick)
    ev_i = 0

    out = {k: np.zeros(n) for k in ("df", "df_true", "omega", "pcc", "grid", "load")}
    mat = {k: np.zeros((n, 3)) for k in ("des", "ctrl", "conv", "abs", "ref", "max", "mu")}
    clamp = np.zeros((n, 3), dtype=bool)

    for k in range(n):
        # (1) events
        while ev_i < len(events) and events[ev_i].tick <= k:
            ev = events[ev_i]
            if isinstance(ev, FrequencyRefStep):
                f_ref += ev.delta_pu
                grid.f_ref = f_ref
            elif isinstance(ev, LoadStep):
                load += ev.delta_pu
                if load < 0:
                    raise ValueError(f"total load negative at tick {k}")
            elif isinstance(ev, CapacityChange):
                i = UNITS.index(ev.unit)
                p_ref[i], p_max[i] = ev.p_ref, ev.p_max
            ev_i += 1

        # (2) measurement
        omega = grid.omega
        _check(k, "omega", omega)
        df_true = freq_deviation(omega, omega_nom)
        df = meter.read(df_true, k)

        # (3) desired local powers
        p_des = allocator.step(df, p_ref if allocator.adaptive_idx else None)
        mus = allocator.mus()

        # (4)-(6) matching control, plants, absolute setpoints
        for i in range(3):
            _check(k, f"p_des_{UNITS[i]}", p_des[i])
            plant, ctrl = plants[i], controllers[i]
            sat = (-p_ref[i], p_max[i] - p_ref[i])
            if ctrl is not None:
                y_next = plant.peek()
                fb = to_absolute_setpoint(y_next, p_ref[i], p_max[i])[0] - p_ref[i]
                u = ctrl.step(p_des[i], fb, sat)
                delta = plant.step(u)
            else:
                u = p_des[i]
                delta = plant.step(u)
                if budget is not None:
                    delta = budget.limit(delta)
            _check(k, f"p_ctrl_{UNITS[i]}", u)
            _check(k, f"p_conv_{UNITS[i]}", delta)
            if not scenario.dvpp_enabled:
                delta = 0.0
            p_abs, clamped = to_absolute_setpoint(delta, p_ref[i], p_max[i])
            delivered = p_abs - p_ref[i]
            if ctrl is None and budget is not None:
                clamped = clamped or (scenario.dvpp_enabled and delivered != p_des[i])
                budget.commit(delivered)
            mat["des"][k, i] = p_des[i]
            mat["ctrl"][k, i] = u
            mat["conv"][k, i] = delivered
            mat["abs"][k, i] = p_abs
            mat["ref"][k, i] = p_ref[i]
            mat["max"][k, i] = p_max[i]
            mat["mu"][k, i] = mus[i]
            clamp[k, i] = clamped

        # (7) power balance and grid advance
        conv = mat["abs"][k]
        dp_pcc = mat["conv"][k, 0] + mat["conv"][k, 1] + mat["conv"][k, 2]
        gen = [conv[0], conv[1], conv[2], g.sg_slack]
        if isinstance(mode, SwingMode):
            gen.append(governor_step(grid, omega))
        dp_grid = power_balance(gen, [load])
        _check(k, "dp_grid", dp_grid)
        if isinstance(mode, SwingMode):
            swing_step(grid, dp_grid)
        else:
            tracking_step(grid, f_ref)

        out["df"][k] = df
        out["df_true"][k] = df_true
        out["omega"][k] = omega
        out["pcc"][k] = dp_pcc
        out["grid"][k] = dp_grid
        out["load"][k] = load

    trace = Trace(
        name=scenario.name, kind=kind if scenario.dvpp_enabled else "off", sample_time=T,
        t=np.arange(n) * T, delta_f=out["df"], delta_f_true=out["df_true"], omega=out["omega"],
        p_des=mat["des"], p_ctrl=mat["ctrl"], p_conv=mat["conv"], p_conv_abs=mat["abs"],
        p_ref=mat["ref"], p_max=mat["max"], mu=mat["mu"], dp_pcc=out["pcc"], dp_grid=out["grid"],
        p_load=out["load"], clamp=clamp,
        event_ticks=tuple(sorted({e.tick for e in events if e.tick < n})),
    )
    trace.desired_aggregate = mat["des"].sum(axis=1)
    return trace
