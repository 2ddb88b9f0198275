"""Command-line entry point.

Subcommands:
  calibrate   build reference curves from bot runs
  run         run one episode, optionally with an adjustment model
  experiment  run a (bot, model, seed) grid from a spec file
  report      turn a trace into a per-window CSV

Exit codes: 0 success, 1 runtime failure inside the toolkit, 2 bad usage
or bad config/input files, 3 unexpected internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from .engine import DdaEngine
from .errors import ConfigError, DdaError
from .experiment import ExperimentSpec, run_experiment
from .reference import calibrate, load_reference, save_reference
from .report import build_rows, episode_metrics, write_csv
from .sim.arena import run_episode
from .sim.config import load_config, resolve_bot
from .sim.trace import EpisodeTrace

__all__ = ["main"]

MODELS = ("off", "metrics", "probabilistic", "dscript")


def _fmt_opt(value, spec: str = ".3f") -> str:
    return "n/a" if value is None else format(value, spec)


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.waves is not None:
        config = config.replacing(waves=args.waves)
    bot = resolve_bot(args.bot)
    refset = calibrate(
        config, bot, n_runs=args.runs, window_len=args.window, seed=args.seed
    )
    save_reference(refset, args.out)
    print(
        f"calibrated {len(refset.curves)} variables from {args.runs} runs "
        f"of {config.name!r} with bot {bot.name!r} -> {args.out}"
    )
    for var_id in sorted(refset.curves):
        curve = refset.curves[var_id]
        print(
            f"  {var_id}: z={curve.z_per_window:.3f}/window, "
            f"{len(curve.points)} knots"
        )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.waves is not None:
        config = config.replacing(waves=args.waves)
    bot = resolve_bot(args.bot)
    references = None
    if args.ref is not None:
        references = load_reference(args.ref)
    if args.model != "off" and references is None:
        raise ConfigError(
            f"model {args.model!r} needs a reference file; pass --ref"
        )
    engine = DdaEngine.from_config(
        config,
        model=args.model,
        references=references,
        fitness=args.fitness,
        regime=args.regime,
    )
    if args.window is not None:
        engine.window_len = args.window
    trace = run_episode(
        config, bot, seed=args.seed, engine=engine, window_len=args.window
    )
    if args.out is not None:
        trace.save(args.out)
    m = episode_metrics(trace)
    print(
        f"run config={config.name} bot={bot.name} model={args.model} "
        f"seed={args.seed}: ticks={m['ticks']} cleared={m['cleared']}/"
        f"{config.waves} deaths={m['deaths']} "
        f"occupancy={_fmt_opt(m['flow_occupancy'])} "
        f"rank={_fmt_opt(m['cumulative_rank'])} "
        f"changes={m['changes_applied']}"
        + (f" -> {args.out}" if args.out is not None else "")
    )
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    spec = ExperimentSpec.from_file(args.spec)
    summary = run_experiment(spec, args.out)
    print(f"experiment {args.spec} -> {args.out}")
    for row in summary:
        print(
            f"  {row['bot']}/{row['model']}: runs={row['runs']} "
            f"occupancy={_fmt_opt(row['flow_occupancy_mean'])}"
            f"±{_fmt_opt(row['flow_occupancy_std'])} "
            f"win_rate={_fmt_opt(row['win_rate_mean'])} "
            f"deaths={_fmt_opt(row['deaths_mean'], '.2f')}"
        )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    trace = EpisodeTrace.load(args.trace)
    columns, rows = build_rows(trace)
    write_csv(args.out, columns, rows)
    print(f"report {args.trace}: {len(rows)} windows, {len(columns)} columns -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddakit",
        description="Difficulty-adjustment engine with a deterministic arena test-bed.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="build reference curves from bot runs")
    p.add_argument("--config", required=True, help="preset name or config JSON path")
    p.add_argument("--bot", required=True, help="bot preset name or bot JSON path")
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=None, help="override window length")
    p.add_argument("--waves", type=int, default=None, help="override wave count")
    p.add_argument("--out", required=True, help="reference JSON output path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run one episode")
    p.add_argument("--config", required=True)
    p.add_argument("--bot", required=True)
    p.add_argument("--model", choices=MODELS, default="off")
    p.add_argument("--ref", default=None, help="reference JSON (required for models)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--waves", type=int, default=None)
    p.add_argument(
        "--fitness",
        choices=("maximize", "difference"),
        default="difference",
        help="dynamic-scripting fitness mode",
    )
    p.add_argument(
        "--regime",
        choices=("clipping", "topculling"),
        default="clipping",
        help="dynamic-scripting weight safeguard",
    )
    p.add_argument("--out", default=None, help="trace JSONL output path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("experiment", help="run a grid from a spec file")
    p.add_argument("--spec", required=True, help="experiment spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="per-window CSV from a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # pragma: no cover - defensive
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
