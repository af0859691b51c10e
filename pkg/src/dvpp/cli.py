"""Command-line entry point: ``dvpp run|compare|bode|validate``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .control import build_desired, build_participation
from .plants import make_plant
from .scenario import KINDS, ConfigError, SimulationError, compare, compute_metrics, load_scenario, run
from .scenario.runner import build_controller
from .tf import multiply, poles

log = logging.getLogger("dvpp")


def _cmd_run(args) -> int:
    sc = load_scenario(args.config)
    trace = run(sc)
    out = Path(args.out)
    trace.write_csv(out / sc.trace_file)
    m = compute_metrics(trace)
    (out / sc.metrics_file).write_text(json.dumps({trace.kind: m.as_dict()}, indent=2, sort_keys=True) + "\n")
    print(f"{sc.name}: {len(trace)} ticks -> {out / sc.trace_file}")
    _print_metrics({trace.kind: m})
    return 0


def _cmd_compare(args) -> int:
    sc = load_scenario(args.config)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        if k not in KINDS + ("off",):
            raise ConfigError(f"unknown kind {k!r} in --kinds (allowed: {', '.join(KINDS + ('off',))})")
    results = compare(sc, kinds, args.out)
    _print_metrics({k: m for k, (_, m) in results.items()})
    return 0


def _print_metrics(table):
    print(f"{'variant':8s} {'rms_matching_error':>20s} {'nadir_pu':>12s} {'recovery_s':>11s}")
    for kind, m in table.items():
        rec = "n/a" if m.recovery_s is None else f"{m.recovery_s:.2f}"
        print(f"{kind:8s} {m.rms_matching_error:20.6e} {m.nadir_pu:12.6f} {rec:>11s}")


def _cmd_bode(args) -> int:
    sc = load_scenario(args.config)
    T = sc.sample_time
    kind = "dpf" if sc.participation == "spf" and not args.as_configured else sc.participation
    factors = build_participation(sc.participation_specs(kind), T)
    nyq = np.pi / T
    omegas = np.logspace(-2, np.log10(0.999 * nyq), args.points)
    cols = [np.abs([m(np.exp(1j * w * T)) for w in omegas]) for m in factors]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega_rad_s", "abs_m_w", "abs_m_p", "abs_m_s"])
        w.writerows(zip(omegas.tolist(), *(c.tolist() for c in cols)))
    print(f"{len(omegas)} points -> {out}")
    return 0


def _cmd_validate(args) -> int:
    sc = load_scenario(args.config)
    T = sc.sample_time
    desired = build_desired(sc.droop, sc.tau, T)
    rows = [("T_des", poles(desired.realized))]
    factors = build_participation(sc.participation_specs(), T)
    for u, m in zip(sc.units, factors):
        rows.append((f"m_{u.name}", poles(m)))
        rows.append((f"m_{u.name}*T_des", poles(multiply(m, desired.realized))))
    warnings = []
    for u in sc.units:
        plant = make_plant(u.name, T)
        ps = poles(plant.tf)
        rows.append((f"P_{u.name}", ps))
        if not ps.is_stable:
            warnings.append(f"open-loop {u.name} plant has pole radius {ps.radius:.6f} (published coefficients)")
        ctrl = build_controller(u, plant.tf, T)
        if ctrl is not None:
            cl = np.roots([float(c) for c in ctrl.closed_loop_poly(plant.tf)])
            radius = float(np.max(np.abs(cl)))
            rows.append((f"closed loop {u.name}", radius))
            if radius >= 1:
                warnings.append(f"closed loop {u.name} has spectral radius {radius:.6f} >= 1")
    print(f"{sc.source}: ok ({sc.participation}, {sc.grid.mode} grid, {len(sc.events)} events)")
    print(f"{'block':24s} {'order':>5s} {'pole radius':>12s}  stable")
    for name, p in rows:
        if isinstance(p, float):
            print(f"{name:24s} {'':>5s} {p:12.6f}  {'yes' if p < 1 else 'no'}")
        else:
            print(f"{name:24s} {len(p.poles):5d} {p.radius:12.6f}  {'yes' if p.is_stable else 'no'}")
    for w in warnings:
        print(f"warning: {w}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dvpp", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log clamp events and diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write its trace and metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="run a scenario under several participation kinds")
    p.add_argument("--config", required=True)
    p.add_argument("--kinds", default=",".join(KINDS), help="comma list of spf, dpf, adpf, off")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("bode", help="magnitude responses of the participation factors")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV file")
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--as-configured", action="store_true",
                   help="use the configured kind even if static (default shows dynamic factors)")
    p.set_defaults(func=_cmd_bode)

    p = sub.add_parser("validate", help="check a config and report the stability of all blocks")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
