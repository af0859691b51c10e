from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from .config import KINDS, Scenario
from .metrics import compute_metrics
from .runner import run


def variant(scenario: Scenario, kind: str) -> Scenario:
    """``kind`` is a participation kind, or ``off`` to disable the DVPP."""
    if kind == "off":
        return replace(scenario, dvpp_enabled=False)
    return replace(scenario.with_kind(kind), dvpp_enabled=True)


def compare(scenario: Scenario, kinds=KINDS, out_dir=None) -> dict:
    """Run ``scenario`` once per kind; returns ``{kind: (trace, metrics)}``."""
    results = {}
    for kind in kinds:
        trace = run(variant(scenario, kind))
        results[kind] = (trace, compute_metrics(trace))
    if out_dir is not None:
        write_comparison(results, out_dir)
    return results


def metrics_table(results: dict) -> dict:
    return {kind: m.as_dict() for kind, (_, m) in results.items()}


def write_comparison(results: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for kind, (trace, _) in results.items():
        trace.write_csv(out / f"trace_{kind}.csv")
    path = out / "metrics.json"
    path.write_text(json.dumps(metrics_table(results), indent=2, sort_keys=True) + "\n")
    return path
