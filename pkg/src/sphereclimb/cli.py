"""Command line drivers: run, sweep, montecarlo, grip-budget and validate."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .coordinator import ClimbError, RobotMode, SystemSlipError, run_climb
from .grip import SPINE_CAPACITY, grip_budget
from .propulsion import PropellantExhaustedError
from .rwhop import fig6_table, fig7_table
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_ABORTED = 3
EXIT_PROPELLANT = 4
EXIT_SYSTEM_SLIP = 5

_MODE_NAMES = [m.value for m in RobotMode]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


@dataclass
class RunOutcome:
    status: str
    exit_code: int
    message: str
    state: object
    record: object
    events: list
    summary: dict


def _summary(scenario: Scenario, state, status: str) -> dict:
    c0 = np.mean(np.asarray(scenario.setup.initial_positions, dtype=float), axis=0)
    c1 = state.center
    delta = c1 - c0
    steps = state.hop_log
    return {
        "status": status,
        "hop_mode": state.hop_mode,
        "seed": scenario.setup.grip.seed,
        "elapsed_time_s": state.time,
        "center_final_x_m": c1[0],
        "center_final_y_m": c1[1],
        "center_final_z_m": c1[2],
        "center_displacement_y_m": delta[1],
        "center_displacement_m": float(np.linalg.norm(delta)),
        "propellant_used_kg": state.propellant_used,
        "hop_steps_completed": len(steps),
        "hop_steps_started": state.hop_steps,
        "grip_attempts": state.attempts,
        "grip_failures": state.failures,
        "max_slip_excursion_m": state.max_excursion,
        "tether_failures": int(np.count_nonzero(state.broken)),
        "samples": len(state.record),
    }


def run_scenario(scenario: Scenario, seed: int | None = None, sample_rate: float | None = None) -> RunOutcome:
    if sample_rate is not None:
        scenario = replace(scenario, setup=replace(scenario.setup, sample_rate=sample_rate))
    if seed is not None:
        scenario = replace(scenario, setup=replace(scenario.setup, grip=replace(scenario.setup.grip, seed=seed)))
    try:
        state, record, events = run_climb(scenario.plan, scenario.setup)
        status, code, msg = "completed", EXIT_OK, ""
    except SystemSlipError as exc:
        state, status, code, msg = exc.state, "system_slip", EXIT_SYSTEM_SLIP, str(exc)
    except ClimbError as exc:
        state, status, code, msg = exc.state, "aborted", EXIT_ABORTED, str(exc)
    except PropellantExhaustedError as exc:
        state, status, code, msg = exc.state, "propellant_exhausted", EXIT_PROPELLANT, str(exc)
    if state is None:
        raise RuntimeError(msg)
    return RunOutcome(status, code, msg, state, state.record, state.events, _summary(scenario, state, status))


def write_trajectory(path, record, n_links: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(record.header(n_links))
        for row in record.rows():
            out = []
            for k, v in enumerate(row):
                # mode columns hold enum codes; write the names
                out.append(_MODE_NAMES[v] if (k - 1) % 13 == 10 and 1 <= k <= 52 else _fmt(v))
            w.writerow(out)


def write_events(path, events) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(e.line() + "\n")


def write_summary(path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in summary.items():
            fh.write(f"{k}: {_fmt(v)}\n")


def write_outputs(outcome: RunOutcome, scenario: Scenario, directory) -> dict:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": d / scenario.output.trajectory,
        "events": d / scenario.output.events,
        "summary": d / scenario.output.summary,
    }
    write_trajectory(paths["trajectory"], outcome.record, len(outcome.state.links))
    write_events(paths["events"], outcome.events)
    write_summary(paths["summary"], outcome.summary)
    return paths


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

MC_COLUMNS = ["run", "seed", "status", "elapsed_time_s", "center_displacement_y_m", "propellant_used_kg",
              "hop_steps_started", "grip_failures", "max_slip_excursion_m"]


def _mc_one(args):
    scenario, run, seed = args
    out = run_scenario(scenario, seed=seed)
    s = out.summary
    row = [run, seed] + [s[k] for k in MC_COLUMNS[2:]]
    retries = [h["retries"] for h in out.state.hop_log]
    return row, retries


def montecarlo(scenario: Scenario, runs: int, base_seed: int = 0, workers: int = 1):
    """Independent runs with seeds ``base_seed + i``.

    Returns ``(rows, aggregate)``. The retry histogram counts completed hop
    steps by the number of retries they needed.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    jobs = [(scenario, i, base_seed + i) for i in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_one, jobs, chunksize=max(1, runs // (4 * workers))))
    else:
        results = [_mc_one(j) for j in jobs]
    rows = [r for r, _ in results]
    hist: dict[int, int] = {}
    for _, retries in results:
        for k in retries:
            hist[k] = hist.get(k, 0) + 1
    status_i = MC_COLUMNS.index("status")
    done = [r for r in rows if r[status_i] == "completed"]
    steps = sum(r[MC_COLUMNS.index("hop_steps_started")] for r in rows)
    fails = sum(r[MC_COLUMNS.index("grip_failures")] for r in rows)
    agg = {
        "runs": runs,
        "base_seed": base_seed,
        "completed": len(done),
        "mean_climb_time_s": float(np.mean([r[3] for r in done])) if done else math.nan,
        "mean_propellant_kg": float(np.mean([r[5] for r in rows])),
        "hop_steps": steps,
        "grip_failures": fails,
        "retries_per_hop": fails / steps if steps else math.nan,
    }
    for k in range(max(hist, default=-1) + 1):
        agg[f"retry_histogram_{k}"] = hist.get(k, 0)
    return rows, agg


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


# ---------------------------------------------------------------------------
# argparse
# ---------------------------------------------------------------------------


def _grid(lo, hi, n, log=False):
    if n < 0:
        raise ValueError("grid size must be >= 0")
    if n == 0:
        return []
    if log:
        return list(np.geomspace(lo, hi, n))
    return list(np.linspace(lo, hi, n))


def _values(text):
    return [float(v) for v in text.split(",") if v.strip()] if text else []


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphereclimb", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one climb scenario")
    r.add_argument("scenario")
    r.add_argument("-o", "--output-dir", help="defaults to the scenario's output.directory")
    r.add_argument("--seed", type=int)
    r.add_argument("--sample-rate", type=float, help="trajectory samples per second")

    v = sub.add_parser("validate", help="load and check a scenario file")
    v.add_argument("scenario")

    s = sub.add_parser("sweep", help="hop-control or hop-distance tables")
    s.add_argument("mode", choices=("fig6", "fig7", "custom"))
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--distance", type=float, default=1.0, help="fig6: hop distance, m")
    s.add_argument("--g-min", type=float, default=1e-3)
    s.add_argument("--g-max", type=float, default=4.0)
    s.add_argument("--g-points", type=int, default=40)
    s.add_argument("--gravity", type=float, default=0.006, help="fig7/custom: gravity, m/s^2")
    s.add_argument("--torque-min", type=float, default=0.025)
    s.add_argument("--torque-max", type=float, default=0.5)
    s.add_argument("--torque-points", type=int, default=20)
    s.add_argument("--rpm-min", type=float, default=300.0)
    s.add_argument("--rpm-max", type=float, default=6000.0)
    s.add_argument("--rpm-points", type=int, default=20)
    s.add_argument("--torques", help="custom: comma separated torques, N m")
    s.add_argument("--omegas", help="custom: comma separated wheel speeds, rad/s")

    m = sub.add_parser("montecarlo", help="repeat a scenario over seeds")
    m.add_argument("scenario")
    m.add_argument("-n", "--runs", type=int, default=100)
    m.add_argument("--base-seed", type=int, default=0)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("-o", "--output-dir", required=True)

    g = sub.add_parser("grip-budget", help="spines needed to hold the team on a face")
    g.add_argument("--mass", type=float, default=12.6, help="system mass, kg")
    g.add_argument("--gravity", type=float, default=3.7)
    g.add_argument("--slope-deg", type=float, default=90.0)
    g.add_argument("--capacity", type=float, default=SPINE_CAPACITY, help="load per spine, N")
    g.add_argument("--anchored", type=int, default=3)
    return p


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    out = run_scenario(scenario, seed=args.seed, sample_rate=args.sample_rate)
    directory = args.output_dir or scenario.output.directory
    paths = write_outputs(out, scenario, directory)
    for k, v in out.summary.items():
        print(f"{k}: {_fmt(v)}")
    print(f"outputs: {paths['trajectory']}, {paths['events']}, {paths['summary']}")
    if out.exit_code:
        print(f"error: {out.message}", file=sys.stderr)
    return out.exit_code


def _cmd_sweep(args) -> int:
    if args.mode == "fig6":
        gs = _grid(args.g_min, args.g_max, args.g_points, log=True)
        rows = fig6_table(gs, args.distance)
        write_table(args.output, ["g_m_s2", "omega_rad_s", "torque_n_m"], rows)
    else:
        if args.mode == "fig7":
            torques = _grid(args.torque_min, args.torque_max, args.torque_points)
            omegas = [rpm * 2.0 * math.pi / 60.0 for rpm in _grid(args.rpm_min, args.rpm_max, args.rpm_points)]
        else:
            torques, omegas = _values(args.torques), _values(args.omegas)
        rows = fig7_table(torques, omegas, args.gravity, workers=args.workers)
        write_table(args.output, ["torque_n_m", "omega_rad_s", "distance_m", "status"], rows)
    print(f"{len(rows)} rows -> {args.output}")
    return EXIT_OK


def _cmd_montecarlo(args) -> int:
    scenario = load_scenario(args.scenario)
    rows, agg = montecarlo(scenario, args.runs, args.base_seed, args.workers)
    d = Path(args.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_table(d / "runs.csv", MC_COLUMNS, rows)
    write_summary(d / "aggregate.txt", agg)
    for k, v in agg.items():
        print(f"{k}: {_fmt(v)}")
    return EXIT_OK


def _cmd_grip_budget(args) -> int:
    b = grip_budget(args.mass, args.gravity, math.radians(args.slope_deg), args.capacity, args.anchored)
    print(f"slope_load_n: {_fmt(b.total_load)}")
    print(f"spine_capacity_n: {_fmt(b.capacity)}")
    print(f"total_spines: {b.total_spines}")
    print(f"share_load_n: {_fmt(b.share_load)}")
    print(f"spines_per_robot: {b.spines_per_robot}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    load_scenario(args.scenario)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run, "validate": _cmd_validate, "sweep": _cmd_sweep,
        "montecarlo": _cmd_montecarlo, "grip-budget": _cmd_grip_budget,
    }[args.command]
    try:
        return handler(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
