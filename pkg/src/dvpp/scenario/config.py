"""Scenario files: YAML with sections mirroring the test-bed parameter table.

Powers are given in kW and frequencies in Hz; everything is converted to
per-unit on load. Validation errors carry the line of the offending key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from ..control import (
    AdaptiveFactor,
    DynamicFactor,
    PidConfig,
    ResidualFactor,
    StaticFactor,
    adaptive_gains,
)
from ..grid import GovernorConfig

UNITS = ("wind", "pv", "statcom")
KINDS = ("spf", "dpf", "adpf")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        loc = source or "<config>"
        if line is not None:
            loc = f"{loc}:{line}"
        super().__init__(f"{loc}: {message}")


# --------------------------------------------------------------------------
# scenario data


@dataclass(frozen=True)
class FrequencyRefStep:
    tick: int
    delta_pu: float


@dataclass(frozen=True)
class LoadStep:
    tick: int
    delta_pu: float


@dataclass(frozen=True)
class CapacityChange:
    tick: int
    unit: str
    p_ref: float
    p_max: float


@dataclass(frozen=True)
class ControllerSpec:
    type: str  # "pid" | "pole_placement" | "none"
    pid: PidConfig | None = None
    model_poles: tuple = ()
    observer_poles: tuple = ()


@dataclass(frozen=True)
class UnitConfig:
    name: str
    p_ref: float
    p_max: float
    mu: float | None
    tau: float
    controller: ControllerSpec
    energy: float | None = None  # pu*s, statcom only


@dataclass(frozen=True)
class GridConfig:
    mode: str  # "tracking" | "swing"
    f_nominal_pu: float
    tau_track: float = 0.2
    H: float = 2.0
    d: float = 1.5
    governor: GovernorConfig | None = None
    sg_slack: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    sample_time: float
    participation: str
    dvpp_enabled: bool
    s_base_kw: float
    f_base_hz: float
    droop: float
    tau: float
    grid: GridConfig
    base_load: float
    units: tuple  # UnitConfig in UNITS order
    events: tuple
    resolution: float | None = None
    update_period: float | None = None
    trace_file: str = "trace.csv"
    metrics_file: str = "metrics.json"
    source: str | None = None

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.sample_time)) + 1

    def unit(self, name: str) -> UnitConfig:
        return self.units[UNITS.index(name)]

    def with_kind(self, kind: str) -> "Scenario":
        if kind not in KINDS:
            raise ValueError(f"unknown participation kind {kind!r}")
        return replace(self, participation=kind)

    def participation_specs(self, kind: str | None = None) -> list:
        """Participation factors in ``UNITS`` order for the given kind."""
        kind = kind or self.participation
        w, p, s = self.units
        mus = [w.mu, p.mu]
        if kind == "adpf" or None in mus:
            mus = adaptive_gains([w.p_ref, p.p_ref])
        if kind == "spf":
            return [StaticFactor(mus[0]), StaticFactor(mus[1]), StaticFactor(0.0)]
        if kind == "dpf":
            return [DynamicFactor(mus[0], w.tau), DynamicFactor(mus[1], p.tau), ResidualFactor(s.tau)]
        if kind == "adpf":
            return [AdaptiveFactor(w.tau, mus[0]), AdaptiveFactor(p.tau, mus[1]), ResidualFactor(s.tau)]
        raise ValueError(f"unknown participation kind {kind!r}")


# --------------------------------------------------------------------------
# loading


def _line_map(node, path=(), out=None):
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_map(v, path + (key,), out)
            out[path + (key,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


class _Reader:
    def __init__(self, data, lines, source):
        self.data = data
        self.lines = lines
        self.source = source

    def error(self, path, message):
        line = None
        p = tuple(path)
        while p and p not in self.lines:
            p = p[:-1]
        line = self.lines.get(p)
        name = ".".join(str(x) for x in path)
        raise ConfigError(f"{name}: {message}" if name else message, line, self.source)

    def node(self, path):
        cur = self.data
        for key in path:
            if isinstance(cur, dict) and key in cur:
                cur = cur[key]
            elif isinstance(cur, list) and isinstance(key, int) and key < len(cur):
                cur = cur[key]
            else:
                return None
        return cur

    def section(self, path, allowed, required=False):
        sec = self.node(path)
        if sec is None:
            if required:
                self.error(path, "missing section")
            return {}
        if not isinstance(sec, dict):
            self.error(path, "expected a mapping")
        for key in sec:
            if key not in allowed:
                self.error(tuple(path) + (key,), f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return sec

    def number(self, path, default=None, *, positive=False, nonneg=False, allow_none=False):
        v = self.node(path)
        if v is None:
            if default is None and not allow_none:
                self.error(path, "required value missing")
            return default
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(path, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            self.error(path, "must be finite")
        if positive and v <= 0:
            self.error(path, f"must be > 0, got {v:g}")
        if nonneg and v < 0:
            self.error(path, f"must be >= 0, got {v:g}")
        return v

    def choice(self, path, options, default=None):
        v = self.node(path)
        if v is None:
            if default is None:
                self.error(path, "required value missing")
            return default
        if v not in options:
            self.error(path, f"expected one of {', '.join(options)}, got {v!r}")
        return v

    def boolean(self, path, default):
        v = self.node(path)
        if v is None:
            return default
        if not isinstance(v, bool):
            self.error(path, f"expected true/false, got {v!r}")
        return v

    def poles(self, path):
        v = self.node(path)
        if v is None:
            return ()
        if not isinstance(v, list):
            self.error(path, "expected a list of poles")
        out = []
        for i, p in enumerate(v):
            if isinstance(p, (int, float)) and not isinstance(p, bool):
                z = complex(p)
            elif isinstance(p, list) and len(p) == 2 and all(isinstance(x, (int, float)) for x in p):
                z = complex(p[0], p[1])
            else:
                self.error(tuple(path) + (i,), f"pole must be a number or [re, im], got {p!r}")
            if abs(z) >= 1:
                self.error(tuple(path) + (i,), f"pole {z} is not strictly inside the unit circle")
            out.append(z)
        return tuple(out)


_TOP = {"name", "duration_s", "sample_time_s", "participation", "dvpp_enabled", "base", "desired", "grid",
        "loads", "measurement", "units", "events", "output"}


def _controller(rd: _Reader, path, unit):
    if unit == "statcom":
        if rd.node(path) is not None:
            rd.error(path, "the STATCOM has no matching controller")
        return ControllerSpec("none")
    sec = rd.section(path, {"type", "kp", "ki", "kd", "derivative_tau_s", "model_poles", "observer_poles"},
                     required=True)
    kind = rd.choice(tuple(path) + ("type",), ("pid", "pole_placement"))
    if kind == "pid":
        for key in ("model_poles", "observer_poles"):
            if key in sec:
                rd.error(tuple(path) + (key,), "only valid for pole_placement")
        try:
            pid = PidConfig(
                kp=rd.number(tuple(path) + ("kp",)),
                ki=rd.number(tuple(path) + ("ki",), 0.0, nonneg=True),
                kd=rd.number(tuple(path) + ("kd",), 0.0),
                derivative_tau=rd.number(tuple(path) + ("derivative_tau_s",), 0.05, positive=True),
            )
        except ValueError as exc:
            rd.error(path, str(exc))
        return ControllerSpec("pid", pid=pid)
    for key in ("kp", "ki", "kd", "derivative_tau_s"):
        if key in sec:
            rd.error(tuple(path) + (key,), "only valid for pid")
    model = rd.poles(tuple(path) + ("model_poles",))
    observer = rd.poles(tuple(path) + ("observer_poles",))
    if not model:
        rd.error(tuple(path) + ("model_poles",), "required for pole_placement")
    return ControllerSpec("pole_placement", model_poles=model, observer_poles=observer)


def parse_scenario(text: str, source: str | None = None) -> Scenario:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    rd = _Reader(data, _line_map(root), source)
    rd.section((), _TOP)

    rd.section(("base",), {"power_kw", "frequency_hz"})
    s_base = rd.number(("base", "power_kw"), 10.0, positive=True)
    f_base = rd.number(("base", "frequency_hz"), 100.0, positive=True)

    T = rd.number(("sample_time_s",), 0.01, positive=True)
    duration = rd.number(("duration_s",), positive=True)
    if duration < T:
        rd.error(("duration_s",), "shorter than one sample")
    participation = rd.choice(("participation",), KINDS, "dpf")

    rd.section(("desired",), {"droop", "tau_s"})
    droop = rd.number(("desired", "droop"), 6.5, positive=True)
    tau = rd.number(("desired", "tau_s"), 0.25, positive=True)

    rd.section(("grid",), {"mode", "f_nominal_hz", "tau_track_s", "inertia_s", "damping", "governor",
                           "sg_slack_kw"}, required=True)
    mode = rd.choice(("grid", "mode"), ("tracking", "swing"))
    f_nom = rd.number(("grid", "f_nominal_hz"), 50.0, positive=True) / f_base
    gov = None
    if mode == "swing":
        if rd.node(("grid", "governor")) is not False:
            rd.section(("grid", "governor"), {"kp", "ki"})
            gov = GovernorConfig(
                kp=rd.number(("grid", "governor", "kp"), GovernorConfig.kp, nonneg=True),
                ki=rd.number(("grid", "governor", "ki"), GovernorConfig.ki, nonneg=True),
            )
    elif rd.node(("grid", "governor")) is not None:
        rd.error(("grid", "governor"), "governor only applies in swing mode")
    H = rd.number(("grid", "inertia_s"), 2.0, positive=True)
    d = rd.number(("grid", "damping"), 1.5, positive=True)
    if T * d / (2 * H) >= 2:
        rd.error(("grid", "damping"), f"forward-Euler swing step unstable (T*d/2H = {T * d / (2 * H):g} >= 2)")
    tau_track = rd.number(("grid", "tau_track_s"), 0.2, positive=True)
    if T / tau_track >= 2:
        rd.error(("grid", "tau_track_s"), "tracking lag unstable: need tau_track_s > T/2")

    rd.section(("loads",), {"base_kw"})
    base_load = rd.number(("loads", "base_kw"), 0.0, nonneg=True) / s_base

    rd.section(("measurement",), {"resolution_hz", "update_period_s"})
    res = rd.number(("measurement", "resolution_hz"), None, positive=True, allow_none=True)
    upd = rd.number(("measurement", "update_period_s"), None, positive=True, allow_none=True)

    rd.section(("units",), set(UNITS), required=True)
    units = []
    for name in UNITS:
        path = ("units", name)
        allowed = {"p_ref_kw", "p_max_kw", "mu", "tau_s", "controller"}
        if name == "statcom":
            allowed = {"p_ref_kw", "p_max_kw", "tau_s", "energy_kws"}
        rd.section(path, allowed, required=True)
        p_ref = rd.number(path + ("p_ref_kw",), nonneg=True) / s_base
        p_max = rd.number(path + ("p_max_kw",), nonneg=True) / s_base
        if p_max < p_ref:
            rd.error(path + ("p_max_kw",), "must be >= p_ref_kw")
        mu = None
        if name != "statcom":
            mu = rd.number(path + ("mu",), None, allow_none=True)
            if mu is not None and not 0 <= mu <= 1:
                rd.error(path + ("mu",), "must lie in [0, 1]")
        energy = None
        if name == "statcom":
            e = rd.number(path + ("energy_kws",), None, positive=True, allow_none=True)
            energy = None if e is None else e / s_base
        units.append(UnitConfig(
            name=name, p_ref=p_ref, p_max=p_max, mu=mu,
            tau=rd.number(path + ("tau_s",), positive=True),
            controller=_controller(rd, path + ("controller",), name),
            energy=energy,
        ))
    w, p = units[0], units[1]
    if (w.mu is None) != (p.mu is None):
        rd.error(("units", "wind" if w.mu is None else "pv", "mu"), "give mu for both wind and pv, or neither")
    if w.mu is not None and abs(w.mu + p.mu - 1.0) > 1e-9:
        rd.error(("units", "pv", "mu"), f"wind and pv mu must sum to 1 (got {w.mu + p.mu:g})")
    if participation == "adpf" or w.mu is None:
        if w.p_ref + p.p_ref <= 0:
            rd.error(("units",), "wind and pv reference powers are both zero")

    slack_raw = rd.node(("grid", "sg_slack_kw"))
    if slack_raw is None or slack_raw == "auto":
        slack = base_load - sum(u.p_ref for u in units)
    else:
        slack = rd.number(("grid", "sg_slack_kw"), nonneg=True) / s_base

    grid = GridConfig(mode=mode, f_nominal_pu=f_nom, tau_track=tau_track, H=H, d=d, governor=gov,
                      sg_slack=slack)

    events = []
    raw_events = rd.node(("events",)) or []
    if not isinstance(raw_events, list):
        rd.error(("events",), "expected a list")
    last_t = -math.inf
    for i, ev in enumerate(raw_events):
        path = ("events", i)
        if not isinstance(ev, dict):
            rd.error(path, "event must be a mapping")
        etype = rd.choice(path + ("type",), ("frequency_step", "load_step", "capacity_change"))
        allowed = {"t_s", "type"} | {
            "frequency_step": {"delta_hz"},
            "load_step": {"delta_kw"},
            "capacity_change": {"unit", "p_ref_kw", "p_max_kw"},
        }[etype]
        rd.section(path, allowed)
        t = rd.number(path + ("t_s",), nonneg=True)
        if t > duration:
            rd.error(path + ("t_s",), f"event at {t:g} s lies beyond duration {duration:g} s")
        if t < last_t:
            rd.error(path + ("t_s",), "events must be sorted by time")
        last_t = t
        tick = int(round(t / T))
        if etype == "frequency_step":
            events.append(FrequencyRefStep(tick, rd.number(path + ("delta_hz",)) / f_base))
        elif etype == "load_step":
            events.append(LoadStep(tick, rd.number(path + ("delta_kw",)) / s_base))
        else:
            unit = rd.choice(path + ("unit",), UNITS)
            cur = units[UNITS.index(unit)]
            p_ref_new = rd.number(path + ("p_ref_kw",), cur.p_ref * s_base, nonneg=True) / s_base
            p_max_new = rd.number(path + ("p_max_kw",), cur.p_max * s_base, nonneg=True) / s_base
            if p_max_new < p_ref_new:
                rd.error(path + ("p_max_kw",), "must be >= p_ref_kw")
            events.append(CapacityChange(tick, unit, p_ref_new, p_max_new))

    rd.section(("output",), {"trace", "metrics"})
    trace_file = rd.node(("output", "trace")) or "trace.csv"
    metrics_file = rd.node(("output", "metrics")) or "metrics.json"

    name = rd.node(("name",)) or (Path(source).stem if source else "scenario")
    return Scenario(
        name=str(name), duration=duration, sample_time=T, participation=participation,
        dvpp_enabled=rd.boolean(("dvpp_enabled",), True), s_base_kw=s_base, f_base_hz=f_base,
        droop=droop, tau=tau, grid=grid, base_load=base_load, units=tuple(units), events=tuple(events),
        resolution=None if res is None else res / f_base, update_period=upd,
        trace_file=str(trace_file), metrics_file=str(metrics_file), source=source,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_scenario(text, str(path))


PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"


def preset_path(name: str) -> Path:
    """Path of a shipped preset, e.g. ``case1_freq_jump_dpf``."""
    p = PRESET_DIR / f"{name}.yaml"
    if not p.exists():
        available = ", ".join(sorted(x.stem for x in PRESET_DIR.glob("*.yaml")))
        raise FileNotFoundError(f"no preset {name!r}; available: {available}")
    return p


def load_preset(name: str) -> Scenario:
    return load_scenario(preset_path(name))
