"""Reference curves: what a target-level player is expected to achieve.

A curve maps episode tick to expected cumulative value of one variable,
stored as knots with linear interpolation between them and clamping
outside. Curves normally come from calibration, which replays a config
with a bot at the target skill level over many seeded runs and averages
the per-window cumulative trajectories; they can also be authored by hand
and loaded from JSON.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .errors import ConfigError, DomainError, ValidationError
from .rng import derive_seed

__all__ = [
    "CurveSource",
    "ReferenceCurve",
    "ReferenceSet",
    "lookup",
    "calibrate",
    "save_reference",
    "load_reference",
]

SCHEMA = "ddakit-reference@1"


@dataclass(frozen=True, slots=True)
class CurveSource:
    kind: str  # "bot_calibration" or "manual"
    profile: str | None = None
    n_runs: int | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "profile": self.profile,
            "n_runs": self.n_runs,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CurveSource":
        return cls(
            kind=data.get("kind", "manual"),
            profile=data.get("profile"),
            n_runs=data.get("n_runs"),
            seed=data.get("seed"),
        )


@dataclass(frozen=True, slots=True)
class ReferenceCurve:
    """Expected cumulative trajectory for one variable.

    ``points`` are (tick, value) knots with strictly increasing ticks,
    starting at tick 0. ``dispersion`` holds the per-knot sample standard
    deviation across calibration runs (zeros for manual curves).
    ``z_per_window`` is the mean per-window figure, the Z of the
    difficulty ratio.
    """

    var_id: str
    points: tuple[tuple[int, float], ...]
    dispersion: tuple[float, ...]
    z_per_window: float
    source: CurveSource

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValidationError(
                f"{self.var_id}: a curve needs at least 2 points, "
                f"got {len(self.points)}"
            )
        ticks = [t for t, _ in self.points]
        if ticks[0] != 0:
            raise ValidationError(f"{self.var_id}: first knot must sit at tick 0")
        for a, b in zip(ticks, ticks[1:]):
            if b <= a:
                raise ValidationError(
                    f"{self.var_id}: knot ticks must strictly increase "
                    f"({a} then {b})"
                )
        if len(self.dispersion) != len(self.points):
            raise ValidationError(
                f"{self.var_id}: dispersion length {len(self.dispersion)} "
                f"!= points length {len(self.points)}"
            )
        if self.source.kind == "bot_calibration":
            if not self.source.n_runs or self.source.n_runs < 1:
                raise ValidationError(
                    f"{self.var_id}: calibration curves need n_runs >= 1"
                )


def lookup(curve: ReferenceCurve, t: float) -> float:
    """Expected cumulative value at tick *t*, clamped beyond the knots."""
    if t < 0:
        raise DomainError(f"tick must be >= 0, got {t}")
    pts = curve.points
    if t <= pts[0][0]:
        return pts[0][1]
    if t >= pts[-1][0]:
        return pts[-1][1]
    # Knot lists are short (one per window); linear scan is fine.
    for (t0, v0), (t1, v1) in zip(pts, pts[1:]):
        if t0 <= t <= t1:
            frac = (t - t0) / (t1 - t0)
            return v0 + frac * (v1 - v0)
    raise AssertionError("unreachable: knots are ordered")  # pragma: no cover


@dataclass(slots=True)
class ReferenceSet:
    """Curves for several variables plus shared calibration metadata."""

    window_len: int
    curves: dict[str, ReferenceCurve] = field(default_factory=dict)

    def get(self, var_id: str) -> ReferenceCurve | None:
        return self.curves.get(var_id)

    def __contains__(self, var_id: str) -> bool:
        return var_id in self.curves

    def __iter__(self):
        return iter(self.curves)


def calibrate(
    config,
    bot,
    n_runs: int,
    window_len: int | None = None,
    seed: int = 0,
) -> ReferenceSet:
    """Build reference curves by replaying a config with a fixed bot.

    Runs *n_runs* seeded episodes without any adjustment engine, collects
    each variable's per-window summaries, and averages across runs: the
    knot at tick ``k * window_len`` is the mean cumulative value over the
    runs that lasted that long, its dispersion the sample standard
    deviation, and Z the mean per-window figure over all (run, window)
    pairs.
    """
    from .sim.arena import run_episode  # late import: sim depends on engine

    if n_runs < 1:
        raise DomainError(f"n_runs must be >= 1, got {n_runs}")
    wlen = window_len if window_len is not None else config.window_len
    if wlen < 1:
        raise DomainError(f"window_len must be >= 1, got {wlen}")

    per_var_cum: dict[str, list[list[float]]] = {
        v.var_id: [] for v in config.variables
    }
    per_var_n: dict[str, list[float]] = {v.var_id: [] for v in config.variables}
    for i in range(n_runs):
        run_seed = derive_seed(seed, f"calibration/{i}")
        trace = run_episode(config, bot, seed=run_seed, window_len=wlen)
        series: dict[str, list[float]] = {v.var_id: [] for v in config.variables}
        for rec in trace.records_of_type("window"):
            for var_id, cell in rec["vars"].items():
                series[var_id].append(float(cell["cum"]))
                per_var_n[var_id].append(float(cell["n"]))
        for var_id, cums in series.items():
            per_var_cum[var_id].append(cums)

    refset = ReferenceSet(window_len=wlen)
    for var in config.variables:
        runs = per_var_cum[var.var_id]
        max_windows = max((len(r) for r in runs), default=0)
        points: list[tuple[int, float]] = [(0, 0.0)]
        dispersion: list[float] = [0.0]
        for k in range(max_windows):
            values = [r[k] for r in runs if len(r) > k]
            mean = sum(values) / len(values)
            if len(values) > 1:
                var_ = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
                std = math.sqrt(var_)
            else:
                std = 0.0
            points.append(((k + 1) * wlen, mean))
            dispersion.append(std)
        if len(points) < 2:
            raise ValidationError(
                f"{var.var_id}: calibration produced no closed windows; "
                "episodes are shorter than one window"
            )
        ns = per_var_n[var.var_id]
        z = sum(ns) / len(ns) if ns else 0.0
        refset.curves[var.var_id] = ReferenceCurve(
            var_id=var.var_id,
            points=tuple(points),
            dispersion=tuple(dispersion),
            z_per_window=z,
            source=CurveSource(
                kind="bot_calibration", profile=bot.name, n_runs=n_runs, seed=seed
            ),
        )
    return refset


def save_reference(refset: ReferenceSet, path: str | os.PathLike) -> None:
    payload = {
        "schema": SCHEMA,
        "window_len": refset.window_len,
        "curves": [
            {
                "var_id": c.var_id,
                "points": [[t, v] for t, v in c.points],
                "dispersion": list(c.dispersion),
                "z_per_window": c.z_per_window,
                "source": c.source.to_dict(),
            }
            for _, c in sorted(refset.curves.items())
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_reference(path: str | os.PathLike) -> ReferenceSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"reference file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"reference file {path} is not valid JSON: {exc}") from None
    if payload.get("schema") != SCHEMA:
        raise ConfigError(
            f"reference file {path}: expected schema {SCHEMA!r}, "
            f"got {payload.get('schema')!r}"
        )
    refset = ReferenceSet(window_len=int(payload["window_len"]))
    for entry in payload["curves"]:
        var_id = entry.get("var_id", "<missing var_id>")
        try:
            curve = ReferenceCurve(
                var_id=entry["var_id"],
                points=tuple((int(t), float(v)) for t, v in entry["points"]),
                dispersion=tuple(float(d) for d in entry["dispersion"]),
                z_per_window=float(entry["z_per_window"]),
                source=CurveSource.from_dict(entry.get("source", {})),
            )
        except (KeyError, TypeError, ValueError, ValidationError) as exc:
            raise ConfigError(
                f"reference file {path}, curve {var_id!r}: {exc}"
            ) from None
        refset.curves[curve.var_id] = curve
    return refset
