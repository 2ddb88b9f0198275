"""Post-run analysis: per-window series and episode summary metrics.

Everything here works off the trace alone; the config snapshot in the
trace header supplies initial factor values and band targets, so a trace
file is self-describing.
"""

from __future__ import annotations

import csv
import os

from .sim.trace import EpisodeTrace

__all__ = ["episode_metrics", "build_rows", "write_csv"]


def episode_metrics(trace: EpisodeTrace) -> dict:
    """Headline numbers for one episode.

    Flow occupancy is the fraction of assessed windows whose global
    difficulty landed inside the config's global band; it stays None for
    traces without assessments (no reference was supplied).
    """
    header = trace.header
    outcome_records = trace.records_of_type("outcome")
    outcome = outcome_records[-1] if outcome_records else {}
    assessments = trace.records_of_type("assessment")
    lo, hi = header["config"]["dda"]["global_band"]
    target = (lo, hi)
    occupancy = None
    mean_difficulty = None
    rank = None
    if assessments:
        values = [a["global_difficulty"] for a in assessments]
        center, margin = target
        in_band = [1 for v in values if center - margin <= v <= center + margin]
        occupancy = len(in_band) / len(values)
        mean_difficulty = sum(values) / len(values)
        rank = assessments[-1]["cumulative_rank"]
    encounters = outcome.get("encounters", 0)
    wins = outcome.get("wins", 0)
    return {
        "ticks": outcome.get("tick"),
        "windows": len(trace.records_of_type("window")),
        "assessed_windows": len(assessments),
        "flow_occupancy": occupancy,
        "mean_global_difficulty": mean_difficulty,
        "cumulative_rank": rank,
        "encounters": encounters,
        "wins": wins,
        "win_rate": (wins / encounters) if encounters else None,
        "deaths": outcome.get("deaths"),
        "cleared": outcome.get("cleared"),
        "changes_applied": len(trace.records_of_type("change_applied")),
        "truncated": outcome.get("truncated", False),
    }


def build_rows(trace: EpisodeTrace) -> tuple[list[str], list[dict]]:
    """Per-window rows for CSV export.

    Raw per-window figures are always present. Difficulty and performance
    columns appear when the trace carries assessments, factor columns when
    any change was applied, and rule-weight columns when the run used
    dynamic scripting.
    """
    header = trace.header
    var_ids = sorted(header["config"]["dda"]["weights"])
    windows = trace.records_of_type("window")
    assessments = {r["tick"]: r for r in trace.records_of_type("assessment")}
    changes = trace.records_of_type("change_applied")
    weight_records = trace.records_of_type("weights")

    changed_factors = sorted({c["factor"] for c in changes})
    rule_ids = sorted(
        {rid for w in weight_records for rid in w["values"]}
    )

    columns = ["tick"]
    for v in var_ids:
        columns.append(f"n_{v}")
    if assessments:
        for v in var_ids:
            columns.append(f"difficulty_{v}")
            columns.append(f"performance_{v}")
        columns += [
            "global_difficulty",
            "global_proficiency",
            "mean_performance",
            "cumulative_rank",
        ]
    for f in changed_factors:
        columns.append(f"factor_{f}")
    for r in rule_ids:
        columns.append(f"weight_{r}")

    factor_values = {
        fid: spec["initial"]
        for fid, spec in header["config"]["factors"].items()
    }
    change_idx = 0
    weight_idx = 0
    latest_weights: dict[str, float] = {}

    rows: list[dict] = []
    for w in windows:
        tick = w["tick"]
        while change_idx < len(changes) and changes[change_idx]["tick"] <= tick:
            factor_values[changes[change_idx]["factor"]] = changes[change_idx]["new"]
            change_idx += 1
        while (
            weight_idx < len(weight_records)
            and weight_records[weight_idx]["tick"] <= tick
        ):
            latest_weights = weight_records[weight_idx]["values"]
            weight_idx += 1
        row: dict = {"tick": tick}
        for v in var_ids:
            cell = w["vars"].get(v)
            row[f"n_{v}"] = None if cell is None else cell["n"]
        a = assessments.get(tick)
        if assessments:
            for v in var_ids:
                va = a["vars"].get(v) if a else None
                row[f"difficulty_{v}"] = va["difficulty"] if va else None
                row[f"performance_{v}"] = va["performance"] if va else None
            row["global_difficulty"] = a["global_difficulty"] if a else None
            row["global_proficiency"] = a["global_proficiency"] if a else None
            row["mean_performance"] = a["mean_performance"] if a else None
            row["cumulative_rank"] = a["cumulative_rank"] if a else None
        for f in changed_factors:
            row[f"factor_{f}"] = factor_values.get(f)
        for r in rule_ids:
            row[f"weight_{r}"] = latest_weights.get(r)
        rows.append(row)
    return columns, rows


def write_csv(
    path: str | os.PathLike, columns: list[str], rows: list[dict]
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in columns})


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)
