"""Experiment runner: a grid of (bot, model, seed) episodes plus aggregates.

The experiment spec is a small JSON file naming a config, the bots and
models to cross, and the seeds. Per-run metrics land in ``runs.csv``, the
per-cell mean/std aggregates in ``summary.csv``. Runs execute in sorted
grid order with per-run seeds, so an experiment is as reproducible as a
single episode.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .engine import DdaEngine
from .errors import ConfigError
from .reference import ReferenceSet, load_reference
from .report import episode_metrics, write_csv
from .sim.arena import run_episode
from .sim.config import GameConfig, load_config, resolve_bot

__all__ = ["ExperimentSpec", "run_experiment"]

RUN_COLUMNS = [
    "config",
    "bot",
    "model",
    "seed",
    "ticks",
    "windows",
    "flow_occupancy",
    "mean_global_difficulty",
    "win_rate",
    "deaths",
    "cumulative_rank",
    "changes_applied",
]

SUMMARY_COLUMNS = [
    "config",
    "bot",
    "model",
    "runs",
    "flow_occupancy_mean",
    "flow_occupancy_std",
    "win_rate_mean",
    "win_rate_std",
    "deaths_mean",
    "cumulative_rank_mean",
]


@dataclass(slots=True)
class ExperimentSpec:
    config: str
    bots: list[str]
    models: list[str]
    seeds: list[int]
    ref: str | None = None
    fitness: str = "difference"
    regime: str = "clipping"
    window: int | None = None
    save_traces: bool = False
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ExperimentSpec":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"experiment spec not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from None
        try:
            seeds = data["seeds"]
            if isinstance(seeds, dict):
                base = int(seeds["base"])
                seeds = [base + i for i in range(int(seeds["n"]))]
            return cls(
                config=data["config"],
                bots=list(data["bots"]),
                models=list(data["models"]),
                seeds=[int(s) for s in seeds],
                ref=data.get("ref"),
                fitness=data.get("fitness", "difference"),
                regime=data.get("regime", "clipping"),
                window=data.get("window"),
                save_traces=bool(data.get("save_traces", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad experiment spec {path}: {exc!r}") from None


def _mean(xs: list[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def _std(xs: list[float]) -> float | None:
    if len(xs) < 2:
        return 0.0 if xs else None
    m = sum(xs) / len(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1))


def run_experiment(spec: ExperimentSpec, out_dir: str | os.PathLike) -> list[dict]:
    """Execute the grid and write runs.csv / summary.csv to *out_dir*."""
    config: GameConfig = load_config(spec.config)
    window = spec.window if spec.window is not None else config.window_len
    references: ReferenceSet | None = None
    if spec.ref is not None:
        references = load_reference(spec.ref)
    needs_ref = [m for m in spec.models if m != "off"]
    if needs_ref and references is None:
        raise ConfigError(
            f"models {needs_ref} need a reference file; set \"ref\" in the spec"
        )
    os.makedirs(out_dir, exist_ok=True)

    run_rows: list[dict] = []
    for bot_name in sorted(spec.bots):
        bot = resolve_bot(bot_name)
        for model in sorted(spec.models):
            for seed in spec.seeds:
                engine = DdaEngine.from_config(
                    config,
                    model=model,
                    references=references,
                    fitness=spec.fitness,
                    regime=spec.regime,
                )
                engine.window_len = window
                trace = run_episode(
                    config, bot, seed=seed, engine=engine, window_len=window
                )
                metrics = episode_metrics(trace)
                run_rows.append(
                    {
                        "config": config.name,
                        "bot": bot_name,
                        "model": model,
                        "seed": seed,
                        "ticks": metrics["ticks"],
                        "windows": metrics["windows"],
                        "flow_occupancy": metrics["flow_occupancy"],
                        "mean_global_difficulty": metrics["mean_global_difficulty"],
                        "win_rate": metrics["win_rate"],
                        "deaths": metrics["deaths"],
                        "cumulative_rank": metrics["cumulative_rank"],
                        "changes_applied": metrics["changes_applied"],
                    }
                )
                if spec.save_traces:
                    trace.save(
                        os.path.join(
                            out_dir, f"trace_{bot_name}_{model}_{seed}.jsonl"
                        )
                    )

    summary_rows: list[dict] = []
    for bot_name in sorted(spec.bots):
        for model in sorted(spec.models):
            cell = [
                r
                for r in run_rows
                if r["bot"] == bot_name and r["model"] == model
            ]
            occ = [r["flow_occupancy"] for r in cell if r["flow_occupancy"] is not None]
            wr = [r["win_rate"] for r in cell if r["win_rate"] is not None]
            deaths = [r["deaths"] for r in cell if r["deaths"] is not None]
            rank = [
                r["cumulative_rank"] for r in cell if r["cumulative_rank"] is not None
            ]
            summary_rows.append(
                {
                    "config": config.name,
                    "bot": bot_name,
                    "model": model,
                    "runs": len(cell),
                    "flow_occupancy_mean": _mean(occ),
                    "flow_occupancy_std": _std(occ),
                    "win_rate_mean": _mean(wr),
                    "win_rate_std": _std(wr),
                    "deaths_mean": _mean(deaths),
                    "cumulative_rank_mean": _mean(rank),
                }
            )

    write_csv(os.path.join(out_dir, "runs.csv"), RUN_COLUMNS, run_rows)
    write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_COLUMNS, summary_rows)
    return summary_rows
