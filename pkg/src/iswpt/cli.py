"""Experiment driver: power targets, single designs, and trade-off sweeps.

Outputs are byte-reproducible for a fixed (config, seed, flags) triple apart
from the wall-time fields, which record real elapsed time. Floats in CSV
files carry 17 significant digits so parsing them back is lossless.

Exit codes: 0 success, 2 configuration/usage error, 3 solver failure,
4 beamformer-recovery failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import designs, metrics, plotting
from .scenario import ConfigError, build_scenario, load_config

SWEEP_METHODS = ("optimal", "suboptimal", "randomized")
ALL_METHODS = SWEEP_METHODS + ("radar-only", "wpt-only")
SWEEP_HEADER = "method,rho,objective,L_r,L_e,sum_power_watts,alpha,iters,wall_time_s,status"


def _fmt(value):
    return format(float(value), ".17g")


def _scenario_from_args(config_path):
    config = load_config(config_path)
    env_seed = os.environ.get("ISWPT_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"ISWPT_SEED must be an integer, got {env_seed!r}") from None
        config = dataclasses.replace(config, seed=seed)
    return build_scenario(config)


def _config_echo(config):
    doc = dataclasses.asdict(config)
    doc["mainlobe_centers"] = list(doc["mainlobe_centers"])
    return doc


def _complex_matrix_doc(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _run_design(scenario, method, rho, samples, targets):
    if method == "optimal":
        return designs.optimal_design(scenario, rho, targets=targets)
    if method == "suboptimal":
        return designs.suboptimal_design(scenario, rho, targets=targets)
    if method == "randomized":
        return designs.randomization_baseline(scenario, rho, samples, targets=targets)
    if method == "radar-only":
        return designs.radar_only(scenario, targets=targets)
    if method == "wpt-only":
        return designs.wpt_only(scenario, targets=targets)
    raise ConfigError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# targets


def cmd_targets(args):
    scenario = _scenario_from_args(args.config)
    targets, _, report = designs.wpt_power_targets(scenario)
    doc = {
        "targets_watts": [float(t) for t in targets],
        "sum_power_watts": float(np.sum(targets)),
        "solver": {
            "status": report.status,
            "iterations": report.iterations,
            "primal_residual": report.primal_residual,
            "dual_residual": report.dual_residual,
            "objective_value": report.objective_value,
        },
    }
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


# ---------------------------------------------------------------------------
# design


def _write_beampattern_csv(path, grid, pattern):
    lines = ["angle_deg,gain_watts"]
    lines.extend(f"{_fmt(a)},{_fmt(p)}" for a, p in zip(grid, pattern))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_design(args):
    if args.method in SWEEP_METHODS:
        if args.rho is None:
            raise ConfigError(f"--rho is required for method {args.method!r}")
        rho = args.rho
    else:
        rho = 0.0 if args.method == "radar-only" else 1.0
        if args.rho is not None and args.rho != rho:
            raise ConfigError(f"method {args.method!r} fixes rho={rho}")
    if not 0.0 <= rho <= 1.0:
        raise ConfigError(f"rho must lie in [0, 1], got {rho}")
    if args.samples < 1:
        raise ConfigError(f"--samples must be at least 1, got {args.samples}")

    scenario = _scenario_from_args(args.config)
    targets, _, _ = designs.wpt_power_targets(scenario)
    start = time.perf_counter()
    result = _run_design(scenario, args.method, rho, args.samples, targets)
    wall_time = time.perf_counter() - start

    m = result.metrics
    doc = {
        "config": _config_echo(scenario.config),
        "method": result.method,
        "rho": m.rho,
        "L_r": m.radar_loss,
        "L_e": m.wpt_loss,
        "alpha": m.alpha,
        "per_user_power_watts": [float(p) for p in m.per_user_power],
        "sum_power_watts": m.sum_power,
        "objective": m.objective,
        "solver_iterations": result.solver_report.iterations,
        "wall_time_s": wall_time,
        "targets_watts": [float(t) for t in result.targets],
        "R": _complex_matrix_doc(result.R),
        "W": _complex_matrix_doc(result.W),
    }
    if result.lam is not None:
        doc["lambda"] = [float(v) for v in result.lam]

    with open(f"{args.out}.result.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")

    pattern = metrics.beampattern(result.R, scenario.steering)
    _write_beampattern_csv(f"{args.out}.beampattern.csv", scenario.grid, pattern)
    if not args.no_figures:
        plotting.render_beampattern(
            f"{args.out}.beampattern.png", scenario.grid, pattern,
            desired=scenario.desired, alpha=m.alpha,
            label=f"{result.method}, rho={m.rho:g}",
        )
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_task(payload):
    """One (method, rho) point; returns a row dict (module-level for pickling)."""
    config, method, rho, samples, targets = payload
    scenario = build_scenario(config)
    targets = np.asarray(targets)
    row = {"method": method, "rho": rho, "status": "ok"}
    start = time.perf_counter()
    try:
        result = _run_design(scenario, method, rho, samples, targets)
    except designs.RecoveryError:
        row["status"] = "recovery_failure"
        row["wall_time_s"] = time.perf_counter() - start
        return row
    except designs.SolverFailure:
        row["status"] = "solver_failure"
        row["wall_time_s"] = time.perf_counter() - start
        return row
    row["wall_time_s"] = time.perf_counter() - start
    m = result.metrics
    row.update(
        objective=m.objective, L_r=m.radar_loss, L_e=m.wpt_loss,
        sum_power=m.sum_power, alpha=m.alpha,
        iters=result.solver_report.iterations,
    )
    return row


def _sweep_row_text(row):
    if row["status"] != "ok":
        return (f"{row['method']},{_fmt(row['rho'])},,,,,,,"
                f"{_fmt(row['wall_time_s'])},{row['status']}")
    return ",".join([
        row["method"],
        _fmt(row["rho"]),
        _fmt(row["objective"]),
        _fmt(row["L_r"]),
        _fmt(row["L_e"]),
        _fmt(row["sum_power"]),
        _fmt(row["alpha"]),
        str(row["iters"]),
        _fmt(row["wall_time_s"]),
        row["status"],
    ])


def cmd_sweep(args):
    rhos_text = [t for t in args.rhos.split(",") if t.strip()]
    if not rhos_text:
        raise ConfigError("--rhos must list at least one value")
    try:
        rhos = [float(t) for t in rhos_text]
    except ValueError as exc:
        raise ConfigError(f"bad --rhos entry: {exc}") from None
    for rho in rhos:
        if not 0.0 <= rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {rho}")
    methods = [m for m in (t.strip() for t in args.methods.split(",")) if m]
    for method in methods:
        if method not in SWEEP_METHODS:
            raise ConfigError(f"unknown sweep method {method!r} (choose from {SWEEP_METHODS})")
    if not methods:
        raise ConfigError("--methods must list at least one method")
    if args.samples < 1:
        raise ConfigError(f"--samples must be at least 1, got {args.samples}")
    jobs = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    if jobs < 1:
        raise ConfigError(f"--jobs must be at least 1, got {jobs}")

    scenario = _scenario_from_args(args.config)
    targets, _, _ = designs.wpt_power_targets(scenario)
    tasks = [
        (scenario.config, method, rho, args.samples, np.asarray(targets))
        for method in methods for rho in rhos
    ]
    tasks.append((scenario.config, "radar-only", 0.0, args.samples, np.asarray(targets)))
    tasks.append((scenario.config, "wpt-only", 1.0, args.samples, np.asarray(targets)))

    if jobs == 1 or len(tasks) == 1:
        rows = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    rows.sort(key=lambda r: (r["method"], r["rho"]))

    lines = [SWEEP_HEADER] + [_sweep_row_text(r) for r in rows]
    with open(f"{args.out}.sweep.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    good = [r for r in rows if r["status"] == "ok"]
    if good and not args.no_figures:
        plotting.render_objective_vs_rho(f"{args.out}.objective_vs_rho.png", good)
        plotting.render_tradeoff(f"{args.out}.tradeoff.png", good)
    return 0 if good else 3


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="iswpt",
        description="Transmit-covariance designs trading radar beampattern "
                    "fidelity against delivered power.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_targets = sub.add_parser("targets", help="print the per-user power targets as JSON")
    p_targets.add_argument("config", help="scenario config JSON file")
    p_targets.set_defaults(func=cmd_targets)

    p_design = sub.add_parser("design", help="run one design and export its results")
    p_design.add_argument("config", help="scenario config JSON file")
    p_design.add_argument("--method", required=True, choices=ALL_METHODS)
    p_design.add_argument("--rho", type=float, default=None, help="trade-off weight in [0, 1]")
    p_design.add_argument("--out", required=True, help="output path prefix")
    p_design.add_argument("--samples", type=int, default=100,
                          help="candidate count for the randomized method")
    p_design.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_design.set_defaults(func=cmd_design)

    p_sweep = sub.add_parser("sweep", help="sweep methods over rho and export a trade-off table")
    p_sweep.add_argument("config", help="scenario config JSON file")
    p_sweep.add_argument("--rhos", required=True, help="comma-separated rho values in [0, 1]")
    p_sweep.add_argument("--methods", default=",".join(SWEEP_METHODS),
                         help="comma-separated subset of: " + ",".join(SWEEP_METHODS))
    p_sweep.add_argument("--out", required=True, help="output path prefix")
    p_sweep.add_argument("--samples", type=int, default=100,
                         help="candidate count for the randomized method")
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help="worker processes (default: logical cores)")
    p_sweep.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except designs.RecoveryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except designs.SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
