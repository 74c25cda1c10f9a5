"""Command-line front end: ``run``, ``plotdata`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from .campaign import budget_at
from .config import ConfigError, RunConfig, format_config, load_config, parse_config
from .grid import format_snapshot, parse_snapshot
from .sim import RunResult, SimulationError, run_campaign

OUTPUT_ROOT_ENV = "BIDSHADE_OUTPUT_ROOT"
CONFIG_NAME = "config.txt"
FIGURES = ("bids", "distribution", "daily_spend", "cumulative_spend")
_DIST_RE = re.compile(r"^dist_(\d+)\.csv$")

log = logging.getLogger("bidshade")


def resolve_output_dir(config: RunConfig, out: str | None) -> Path:
    if out:
        return Path(out)
    if config.output_dir:
        return Path(config.output_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{config.scenario}-seed{config.seed}"


def run_files(result: RunResult) -> dict:
    """Every file of a run directory, keyed by name."""
    files = {"timeseries.csv": rio.csv_text(rio.TIMESERIES_HEADER,
                                            (r.row() for r in result.records))}
    for k, weights in result.snapshots.items():
        files[f"dist_{k}.csv"] = format_snapshot(weights, result.grid)
    for k, line in result.model_snapshots.items():
        files[f"model_{k}.csv"] = line + "\n"
    s = result.summary
    files["summary.csv"] = rio.csv_text(rio.SUMMARY_HEADER, [[s[h] for h in rio.SUMMARY_HEADER]])
    files[CONFIG_NAME] = format_config(result.config)
    return files


def cmd_run(config: RunConfig, out: str | None = None, dry_run: bool = False) -> int:
    out_dir = resolve_output_dir(config, out)
    if dry_run:
        print(f"# config valid; {config.total_steps} steps; output would go to {out_dir}")
        print(format_config(config), end="")
        return 0
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(out_dir, os.W_OK):
            raise PermissionError(f"output directory is not writable: {out_dir}")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_campaign(config)
    except SimulationError as exc:
        print(f"error: run aborted at {exc}", file=sys.stderr)
        return 3
    try:
        rio.write_files_atomically(out_dir, run_files(result))
    except OSError as exc:
        print(f"error: writing outputs failed: {exc}", file=sys.stderr)
        return 2
    s = result.summary
    print(f"done: {s['steps']} steps, spend {s['total_spend']:.2f}, "
          f"surplus {s['total_surplus']:.2f}, win rate {s['win_rate']:.4f}, "
          f"final entropy {s['final_entropy']:.4f} -> {out_dir}")
    return 0


def _load_run(run_dir: Path):
    config_path = run_dir / CONFIG_NAME
    if not config_path.is_file():
        raise FileNotFoundError(f"missing run file: {config_path}")
    config = parse_config(config_path.read_text())
    header, rows = rio.read_csv(run_dir / "timeseries.csv")
    if tuple(header) != rio.TIMESERIES_HEADER:
        raise ValueError("timeseries.csv header mismatch")
    s_header, s_rows = rio.read_csv(run_dir / "summary.csv")
    if tuple(s_header) != rio.SUMMARY_HEADER or len(s_rows) != 1:
        raise ValueError("summary.csv is malformed")
    steps = int(s_rows[0][rio.SUMMARY_HEADER.index("steps")])
    if len(rows) != steps or any(len(r) != len(header) for r in rows):
        raise ValueError(f"timeseries.csv is truncated: {len(rows)} rows, expected {steps}")
    table = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(header)}
    return config, table


def plot_rows(run_dir, figure: str):
    """(header, rows) of the derived plot-data table for ``figure``."""
    run_dir = Path(run_dir)
    config, ts = _load_run(run_dir)
    schedule = config.schedule()
    if figure == "bids":
        return ("t_hours", "bid"), list(zip(ts["t_hours"], ts["bid"]))
    if figure == "distribution":
        snaps = sorted((int(m.group(1)), p) for p in run_dir.iterdir()
                       if (m := _DIST_RE.match(p.name)))
        if not snaps:
            raise FileNotFoundError(f"no distribution snapshots in {run_dir}")
        rows = []
        for k, path in snaps:
            points, weights = parse_snapshot(path.read_text())
            rows.extend((k, t1, t2, w) for (t1, t2), w in zip(points, weights))
        return ("k", "theta1", "theta2", "weight"), rows
    setpoints = np.array([budget_at(schedule, t) for t in ts["t_hours"]]) / config.steps_per_day
    if figure == "daily_spend":
        day = ((ts["k"].astype(int) - 1) // config.steps_per_day) + 1
        rows = []
        for d in np.unique(day):
            sel = day == d
            target = budget_at(schedule, ts["t_hours"][sel][-1])
            rows.append((int(d), target, float(ts["spend"][sel].sum())))
        return ("day", "target", "actual"), rows
    if figure == "cumulative_spend":
        return (("t_hours", "cumulative_target", "cumulative_actual"),
                list(zip(ts["t_hours"], np.cumsum(setpoints), np.cumsum(ts["spend"]))))
    raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")


def cmd_plotdata(run_dir, figure: str, out: str | None = None) -> int:
    run_dir = Path(run_dir)
    try:
        header, rows = plot_rows(run_dir, figure)
        target = Path(out) if out else run_dir / f"plot_{figure}.csv"
        rio.atomic_write_text(target, rio.csv_text(header, rows))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(rows)} rows to {target}")
    return 0


def cmd_validate(path) -> int:
    try:
        config = load_config(path)
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"ok: scenario {config.scenario!r}, {config.n1 * config.n2} grid points, "
          f"{config.total_steps} steps")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bidshade", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a campaign simulation")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (default: config or ${OUTPUT_ROOT_ENV})")
    run.add_argument("--dry-run", action="store_true", help="validate and print, write nothing")

    plot = sub.add_parser("plotdata", help="emit CSV series for a figure")
    plot.add_argument("run_dir")
    plot.add_argument("--figure", required=True, choices=FIGURES)
    plot.add_argument("--out", help="output CSV path (default: <run_dir>/plot_<figure>.csv)")

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        try:
            config = load_config(args.config)
        except (OSError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return cmd_run(config, args.out, args.dry_run)
    if args.command == "plotdata":
        return cmd_plotdata(args.run_dir, args.figure, args.out)
    return cmd_validate(args.config)


if __name__ == "__main__":
    sys.exit(main())
