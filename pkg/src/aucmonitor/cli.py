"""Command-line interface: ``auc``, ``monitor``, ``simulate`` and ``replay``.

Exit codes: 0 success, 1 I/O or configuration error, 2 degenerate data.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import __version__
from ._backend import BACKEND
from .drift_sim import (
    SIM_EPOCH,
    ScenarioError,
    default_paper_scenario,
    generate,
    parse_scenario,
    read_truth,
    render_scenario,
    write_prediction_log,
    write_truth,
)
from .ingest import (
    LogFormatError,
    LogQualityError,
    WindowedBatch,
    parse_log,
    window_by_count,
    window_by_month,
    window_by_step,
)
from .kalman_monitor import (
    STRATEGIES,
    FilterState,
    Monitor,
    MonitorRecord,
    confidence_interval,
    monitor_batches,
)
from .roc_metrics import DEFAULT_MIN_POSITIVES, DegenerateBatchError, ScoredBatch, delong

log = logging.getLogger("aucmonitor")

EXIT_OK, EXIT_IO, EXIT_DATA = 0, 1, 2

MONITOR_HEADER = [
    "window", "raw", "raw95CI_up", "raw95CI_low", "filtered", "filtered95CI_up",
    "filtered95CI_low", "m", "n", "gain", "upper_bound", "skipped",
]
AUC_HEADER = ["theta", "variance", "ci_low", "ci_high", "m", "n", "upper_bound"]

DEFAULTS = {
    "window": "monthly",
    "min_positives": DEFAULT_MIN_POSITIVES,
    "baseline": None,
    "seed": 0,
    "out": None,
    "update_rule": "state",
}


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


# --------------------------------------------------------------------------
# formatting and file helpers
# --------------------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return f"{value:.4f}"


def monitor_row(rec: MonitorRecord) -> list[str]:
    return [
        rec.window_id, fmt(rec.raw), fmt(rec.raw_ci_high), fmt(rec.raw_ci_low),
        fmt(rec.filtered), fmt(rec.filtered_ci_high), fmt(rec.filtered_ci_low),
        fmt(rec.m), fmt(rec.n), fmt(rec.gain), fmt(rec.used_upper_bound), fmt(rec.skipped),
    ]


def render_monitor_csv(records: Iterable[MonitorRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MONITOR_HEADER)
    for rec in records:
        w.writerow(monitor_row(rec))
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def metadata_path(out: Path) -> Path:
    return out.with_name(out.stem + ".meta.json")


def render_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------

def load_config_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fp:
            cp.read_file(fp)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not cp.has_section("aucmonitor"):
        raise ConfigError(f"{path}: missing [aucmonitor] section")
    sec = cp["aucmonitor"]
    unknown = set(sec) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {', '.join(sorted(unknown))}")
    return dict(sec)


def resolve_config(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides built-in defaults."""
    cfg = dict(DEFAULTS)
    cfg.update(load_config_file(getattr(args, "config", None)))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    try:
        cfg["min_positives"] = int(cfg["min_positives"])
        cfg["seed"] = int(cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["min_positives"] < 0:
        raise ConfigError("min_positives must be >= 0")
    if cfg["seed"] < 0:
        raise ConfigError("seed must be >= 0")
    if cfg["update_rule"] not in STRATEGIES:
        raise ConfigError(f"update_rule must be one of {', '.join(STRATEGIES)}")
    parse_window_mode(cfg["window"])
    return cfg


def parse_window_mode(text: str) -> tuple[str, int]:
    if text in ("monthly", "step"):
        return text, 0
    if text.startswith("count:"):
        try:
            size = int(text.split(":", 1)[1])
        except ValueError:
            size = 0
        if size >= 2:
            return "count", size
    raise ConfigError(f"bad --window {text!r}; use monthly, step or count:N with N >= 2")


def make_windows(records, mode: str, origin=None) -> list[WindowedBatch]:
    kind, size = parse_window_mode(mode)
    if kind == "monthly":
        return window_by_month(records)
    if kind == "count":
        return window_by_count(records, size)
    return window_by_step(records, origin)


def read_log(path: str):
    with open(path, newline="") as fp:
        parsed = parse_log(fp)
    if parsed.errors:
        sys.stderr.write(parsed.error_report())
    return parsed.records


def read_batch(path: str) -> ScoredBatch:
    records = read_log(path)
    return ScoredBatch.from_labels([r.score for r in records], [r.label for r in records])


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_auc(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    est = delong(read_batch(args.log), cfg["min_positives"])
    lo, hi = confidence_interval(est.theta, est.variance)
    print(f"AUC       : {est.theta:.4f}")
    print(f"variance  : {est.variance:.6g}")
    print(f"95% CI    : ({lo:.4f}, {hi:.4f})")
    print(f"positives : {est.m}")
    print(f"negatives : {est.n}")
    print(f"upper bound used: {fmt(est.used_upper_bound)}")
    # fixed-point would print most variances as 0.0000
    row = [fmt(est.theta), f"{est.variance:.4e}", fmt(lo), fmt(hi), fmt(est.m), fmt(est.n), fmt(est.used_upper_bound)]
    print(",".join(AUC_HEADER))
    print(",".join(row))
    return EXIT_OK


def run_monitor(
    windows: Sequence[WindowedBatch],
    cfg: dict,
    baseline_path: Optional[str] = None,
    resume: Optional[FilterState] = None,
) -> tuple[list[MonitorRecord], Monitor]:
    if not any(w.usable for w in windows):
        raise DataError("no usable windows")
    baseline = None
    if baseline_path:
        baseline = delong(read_batch(baseline_path), cfg["min_positives"])
    if baseline is not None and resume is not None:
        raise ConfigError("--baseline and --resume are mutually exclusive")
    for w in windows:
        if w.flags:
            log.info("window %s flagged: %s", w.window_id, ", ".join(w.flags))
    mon = Monitor(baseline, cfg["update_rule"], state=resume)
    rows = list(
        monitor_batches(
            ((w.window_id, w.batch) for w in windows),
            min_positives=cfg["min_positives"],
            monitor=mon,
        )
    )
    return rows, mon


def run_metadata(command: str, cfg: dict, **counts) -> dict:
    return {
        "command": command,
        "config": {k: cfg[k] for k in sorted(cfg)},
        "counts": counts,
        "version": __version__,
    }


def cmd_monitor(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    records = read_log(args.log)
    windows = make_windows(records, cfg["window"])
    out = Path(cfg["out"] or "monitor.csv")
    resume = None
    if args.resume:
        resume = FilterState.from_snapshot(Path(args.resume).read_text())
    rows, mon = run_monitor(windows, cfg, cfg["baseline"], resume)
    meta = run_metadata(
        "monitor", cfg,
        records=len(records), windows=len(windows),
        skipped=sum(r.skipped for r in rows),
        upper_bound=sum(r.used_upper_bound for r in rows),
    )
    atomic_write(out, render_monitor_csv(rows))
    atomic_write(metadata_path(out), render_json(meta))
    if args.snapshot and mon.state is not None:
        atomic_write(Path(args.snapshot), mon.state.to_snapshot())
    print(f"wrote {len(rows)} windows to {out}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.paper_default == bool(args.scenario):
        raise ConfigError("give either a scenario file or --paper-default")
    if args.paper_default:
        scenario = default_paper_scenario(cfg["seed"])
    else:
        with open(args.scenario) as fp:
            scenario = parse_scenario(fp.read())
        if args.seed is not None or "seed" in load_config_file(args.config):
            scenario = scenario.with_seed(cfg["seed"])
    cfg["seed"] = scenario.seed
    outdir = Path(cfg["out"] or "sim")
    steps = list(generate(scenario))
    log_buf, truth_buf = io.StringIO(), io.StringIO()
    write_prediction_log(steps, log_buf)
    write_truth(scenario.plan(), truth_buf)
    meta = run_metadata(
        "simulate", cfg, steps=len(steps), samples=sum(s.batch.m + s.batch.n for s in steps),
    )
    meta["phase_bounds"] = scenario.phase_bounds()
    atomic_write(outdir / "predictions.csv", log_buf.getvalue())
    atomic_write(outdir / "truth.csv", truth_buf.getvalue())
    atomic_write(outdir / "scenario.ini", render_scenario(scenario))
    atomic_write(outdir / "simulate.meta.json", render_json(meta))
    print(f"wrote {len(steps)} steps to {outdir}")
    return EXIT_OK


def replay_summary(rows: Sequence[MonitorRecord], truth: dict[int, float], bounds) -> dict:
    def mae(pairs):
        pairs = [(v, t) for v, t in pairs if v is not None]
        return sum(abs(v - t) for v, t in pairs) / len(pairs) if pairs else None

    by_step = {int(r.window_id): r for r in rows}
    phases = []
    for i, (start, stop) in enumerate(bounds, 1):
        recs = [(by_step[s], truth[s]) for s in range(start, stop)]
        phases.append({
            "phase": i,
            "steps": [start, stop - 1],
            "mae_raw": mae((r.raw, t) for r, t in recs),
            "mae_filtered": mae((r.filtered, t) for r, t in recs),
        })
    inside = [
        r.filtered_ci_low <= truth[int(r.window_id)] <= r.filtered_ci_high
        for r in rows if r.filtered is not None
    ]
    return {"phases": phases, "filtered_ci_coverage": sum(inside) / len(inside) if inside else None}


def cmd_replay(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.window is None and "window" not in load_config_file(args.config):
        cfg["window"] = "step"
    simdir = Path(args.simdir)
    with open(simdir / "truth.csv", newline="") as fp:
        truth_plan = read_truth(fp)
    if not truth_plan:
        raise DataError("truth file has no steps")
    truth = {p.step: p.true_auc for p in truth_plan}
    scenario_file = simdir / "scenario.ini"
    if scenario_file.exists():
        bounds = parse_scenario(scenario_file.read_text()).phase_bounds()
    else:
        bounds = [(min(truth), max(truth) + 1)]

    records = read_log(str(simdir / "predictions.csv"))
    windows = make_windows(records, cfg["window"], origin=SIM_EPOCH)
    window_steps = [int(w.window_id) for w in windows]
    if window_steps != sorted(truth):
        raise DataError("step mismatch between prediction log and truth file")
    for w in windows:
        p = truth_plan[window_steps.index(int(w.window_id))]
        if (w.m, w.n) != (p.m, p.n):
            raise DataError(f"step {w.window_id}: log has m={w.m} n={w.n}, truth says m={p.m} n={p.n}")

    rows, _ = run_monitor(windows, cfg, cfg["baseline"])
    summary = replay_summary(rows, truth, bounds)
    outdir = Path(cfg["out"] or simdir)
    atomic_write(outdir / "monitor.csv", render_monitor_csv(rows))
    atomic_write(outdir / "summary.json", render_json(summary))
    atomic_write(outdir / "monitor.meta.json", render_json(run_metadata("replay", cfg, steps=len(rows))))
    for ph in summary["phases"]:
        print(
            f"phase {ph['phase']} (steps {ph['steps'][0]}-{ph['steps'][1]}): "
            f"MAE raw {fmt(ph['mae_raw'])}  filtered {fmt(ph['mae_filtered'])}"
        )
    print(f"truth inside filtered 95% CI: {fmt(summary['filtered_ci_coverage'])}")
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with an [aucmonitor] section")
    common.add_argument("--min-positives", dest="min_positives", type=int,
                        help=f"use the variance bound at or below this many positives [default {DEFAULT_MIN_POSITIVES}]")
    common.add_argument("--seed", type=int, help="random seed [default 0]")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="store_true")

    filt = argparse.ArgumentParser(add_help=False)
    filt.add_argument("--window", help="monthly | count:N | step [default monthly]")
    filt.add_argument("--baseline", help="prediction log whose AUC seeds the filter")
    filt.add_argument("--update-rule", dest="update_rule", choices=STRATEGIES,
                      help="how variance components are carried forward [default state]")

    parser = argparse.ArgumentParser(prog="aucmonitor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("auc", parents=[common], help="AUC and DeLong variance of a whole log")
    p.add_argument("log")
    p.set_defaults(func=cmd_auc)

    p = sub.add_parser("monitor", parents=[common, filt], help="windowed raw and filtered AUC")
    p.add_argument("log")
    p.add_argument("--snapshot", help="write the final filter state (key=value lines) here")
    p.add_argument("--resume", help="start from a state written by --snapshot")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic drift scenario")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--paper-default", action="store_true", help="built-in three-phase scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", parents=[common, filt], help="monitor a simulation and score it against truth")
    p.add_argument("simdir", help="directory written by 'simulate'")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DegenerateBatchError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LogQualityError as exc:
        sys.stderr.write(exc.report)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, ConfigError, LogFormatError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
