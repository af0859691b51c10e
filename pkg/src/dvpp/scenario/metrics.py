from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .config import UNITS


@dataclass(frozen=True)
class Metrics:
    rms_matching_error: float
    nadir_pu: float
    recovery_s: float | None      # None: not recovered before horizon end
    unit_tracking_rms: dict
    peak_desired: float

    @property
    def recovered(self) -> bool:
        return self.recovery_s is not None

    def as_dict(self) -> dict:
        return asdict(self)


def _window(trace, window):
    n = len(trace)
    if window is not None:
        lo, hi = window
        return max(0, int(lo)), min(n, int(hi))
    ev = trace.event_ticks
    return (ev[0] if ev else 0), n


def recovery_time(signal: np.ndarray, sample_time: float, epsilon: float, hold: float = 1.0) -> float | None:
    """Time from the first sample until ``|signal| <= epsilon`` holds for ``hold`` seconds."""
    inside = np.abs(signal) <= epsilon
    need = max(1, int(round(hold / sample_time)))
    run = 0
    for k, ok in enumerate(inside):
        run = run + 1 if ok else 0
        if run >= need:
            return (k - run + 1) * sample_time
    # still inside at the horizon end counts if it never left afterwards
    if run and run == len(inside):
        return 0.0
    return None


def compute_metrics(trace, desired_aggregate: np.ndarray | None = None, epsilon: float | None = None,
                    window: tuple | None = None, frequency_window: tuple | None = None) -> Metrics:
    """Matching error over ``window`` (default: first event to end) and frequency metrics.

    Nadir and recovery use ``frequency_window``, by default the first event
    up to the next event. ``epsilon`` defaults to 10% of the peak deviation.
    """
    if trace is None or len(trace) == 0:
        raise ValueError("empty trace")
    desired = trace.desired_aggregate if desired_aggregate is None else np.asarray(desired_aggregate)
    if desired.shape[0] != len(trace):
        raise ValueError(f"desired trace has {desired.shape[0]} samples, trace has {len(trace)}")

    lo, hi = _window(trace, window)
    err = trace.dp_pcc[lo:hi] - desired[lo:hi]
    rms = math.sqrt(float(np.mean(err * err))) if hi > lo else 0.0
    peak = float(np.max(np.abs(desired[lo:hi]))) if hi > lo else 0.0
    unit_rms = {}
    for i, name in enumerate(UNITS):
        e = trace.p_conv[lo:hi, i] - trace.p_des[lo:hi, i]
        unit_rms[name] = math.sqrt(float(np.mean(e * e))) if hi > lo else 0.0

    if frequency_window is None:
        ev = trace.event_ticks
        f_lo = ev[0] if ev else 0
        f_hi = ev[1] if len(ev) > 1 else len(trace)
    else:
        f_lo, f_hi = frequency_window
    df = trace.delta_f_true[f_lo:f_hi]
    if df.size == 0 or not np.any(df):
        return Metrics(rms, 0.0, 0.0, unit_rms, peak)
    idx = int(np.argmax(np.abs(df)))
    nadir = float(df[idx])
    eps = 0.1 * abs(nadir) if epsilon is None else float(epsilon)
    rec = recovery_time(df, trace.sample_time, eps)
    return Metrics(rms, nadir, rec, unit_rms, peak)
