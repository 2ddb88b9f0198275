"""Turning closed telemetry windows into difficulty and flow judgements.

Per variable and window this computes a normalized difficulty ratio
``(N - Z) / D`` (N observed, Z reference, D window length), its complement
ease, and, when a reference curve is available, the performance ratio of
cumulative achieved value against the curve. Each value is classified
against a flow band, and a weighted aggregate produces one global
difficulty / proficiency pair per window plus a running cumulative rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .errors import DomainError, ValidationError
from .reference import ReferenceCurve, lookup
from .telemetry import Orientation, TrackedVariable, VariableWindow

__all__ = [
    "FlowSemantics",
    "FlowClass",
    "FlowBand",
    "DIFFICULTY_BAND",
    "PERFORMANCE_BAND",
    "DifficultyValue",
    "difficulty_ratio",
    "ease",
    "performance_ratio",
    "classify_flow",
    "global_proficiency",
    "VariableAssessment",
    "AssessmentReport",
    "evaluate",
]


class FlowSemantics(Enum):
    """What kind of value a flow band brackets.

    DIFFICULTY_CENTERED bands sit on the normalized difficulty scale, where
    the comfortable zone is around the middle of [0, 1]. RATIO_CENTERED
    bands sit on the achieved-over-expected performance scale around 1.
    """

    DIFFICULTY_CENTERED = "difficulty_centered"
    RATIO_CENTERED = "ratio_centered"


class FlowClass(Enum):
    TOO_EASY = "too_easy"
    IN_FLOW = "in_flow"
    TOO_HARD = "too_hard"


@dataclass(frozen=True, slots=True)
class FlowBand:
    target: float
    margin: float
    semantics: FlowSemantics

    def __post_init__(self) -> None:
        if self.margin <= 0:
            raise DomainError(f"band margin must be > 0, got {self.margin}")
        lo = self.target - self.margin
        hi = self.target + self.margin
        if self.semantics is FlowSemantics.DIFFICULTY_CENTERED:
            if lo < 0.0 or hi > 1.0:
                raise DomainError(
                    f"difficulty band [{lo}, {hi}] leaves the [0, 1] scale"
                )
        else:
            if lo < 0.0:
                raise DomainError(f"ratio band lower edge {lo} is negative")

    @property
    def lower(self) -> float:
        return self.target - self.margin

    @property
    def upper(self) -> float:
        return self.target + self.margin


DIFFICULTY_BAND = FlowBand(0.5, 0.1, FlowSemantics.DIFFICULTY_CENTERED)
PERFORMANCE_BAND = FlowBand(1.0, 0.2, FlowSemantics.RATIO_CENTERED)


@dataclass(frozen=True, slots=True)
class DifficultyValue:
    value: float
    clamped: bool


def difficulty_ratio(n: float, z: float, d: float) -> DifficultyValue:
    """Normalized difficulty ``(n - z) / d`` clamped into [0, 1].

    The clamp keeps downstream aggregation on one scale; the flag reports
    that the raw value left it.
    """
    if d <= 0:
        raise DomainError(f"window length d must be > 0, got {d}")
    raw = (n - z) / d
    if raw < 0.0:
        return DifficultyValue(0.0, True)
    if raw > 1.0:
        return DifficultyValue(1.0, True)
    return DifficultyValue(raw, False)


def ease(difficulty: float) -> float:
    if not 0.0 <= difficulty <= 1.0:
        raise DomainError(f"difficulty must be in [0, 1], got {difficulty}")
    return 1.0 - difficulty


def performance_ratio(cp: float, ep_t: float) -> float:
    """Achieved cumulative value over expected cumulative value."""
    if ep_t <= 0:
        raise DomainError(f"expected cumulative value must be > 0, got {ep_t}")
    if cp < 0:
        raise DomainError(f"cumulative value must be >= 0, got {cp}")
    return cp / ep_t


def classify_flow(
    value: float, band: FlowBand, orientation: Orientation
) -> FlowClass:
    """Place a value relative to a band, honouring variable orientation.

    Band edges are inclusive. The canonical orientation of a
    difficulty-centered band is higher-is-harder, and of a ratio-centered
    band higher-is-easier (achievement above expectation); a variable with
    the opposite orientation flips TOO_EASY and TOO_HARD.
    """
    if value < band.lower:
        below = True
    elif value > band.upper:
        below = False
    else:
        return FlowClass.IN_FLOW
    if band.semantics is FlowSemantics.DIFFICULTY_CENTERED:
        result = FlowClass.TOO_EASY if below else FlowClass.TOO_HARD
        flip = orientation is Orientation.HIGHER_IS_EASIER
    else:
        result = FlowClass.TOO_HARD if below else FlowClass.TOO_EASY
        flip = orientation is Orientation.HIGHER_IS_HARDER
    if flip:
        result = (
            FlowClass.TOO_HARD
            if result is FlowClass.TOO_EASY
            else FlowClass.TOO_EASY
        )
    return result


def global_proficiency(
    values: Mapping[str, float], weights: Mapping[str, float]
) -> float:
    """Weighted mean of per-variable scores in [0, 1]."""
    if set(values) != set(weights):
        missing = set(values) ^ set(weights)
        raise ValidationError(
            "values and weights must cover the same variables; "
            "mismatched: " + ", ".join(sorted(missing))
        )
    if not values:
        raise ValidationError("cannot aggregate zero variables")
    total = 0.0
    for var_id, w in weights.items():
        if w < 0:
            raise DomainError(f"weight for {var_id} must be >= 0, got {w}")
        total += w
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"weights must sum to 1, got {total}")
    out = 0.0
    for var_id, v in values.items():
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"value for {var_id} must be in [0, 1], got {v}")
        out += weights[var_id] * v
    return out


@dataclass(frozen=True, slots=True)
class VariableAssessment:
    var_id: str
    n: float
    z: float
    difficulty: float
    clamped: bool
    ease: float
    cumulative: float
    expected: float | None
    performance: float | None
    classification: FlowClass
    orientation: Orientation

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "z": self.z,
            "difficulty": round(self.difficulty, 9),
            "clamped": self.clamped,
            "performance": None
            if self.performance is None
            else round(self.performance, 9),
            "class": self.classification.value,
        }


@dataclass(frozen=True, slots=True)
class AssessmentReport:
    window_start: int
    window_len: int
    per_variable: dict[str, VariableAssessment]
    global_difficulty: float
    global_proficiency: float
    mean_performance: float | None
    cumulative_rank: float
    windows_seen: int

    @property
    def window_end(self) -> int:
        return self.window_start + self.window_len

    def to_record(self) -> dict:
        return {
            "window_start": self.window_start,
            "window_len": self.window_len,
            "vars": {k: v.to_record() for k, v in sorted(self.per_variable.items())},
            "global_difficulty": round(self.global_difficulty, 9),
            "global_proficiency": round(self.global_proficiency, 9),
            "mean_performance": None
            if self.mean_performance is None
            else round(self.mean_performance, 9),
            "cumulative_rank": round(self.cumulative_rank, 9),
            "windows_seen": self.windows_seen,
        }


def evaluate(
    windows: Sequence[VariableWindow],
    references: Mapping[str, ReferenceCurve],
    bands: Mapping[str, FlowBand],
    weights: Mapping[str, float],
    *,
    variables: Mapping[str, TrackedVariable],
    default_band: FlowBand = DIFFICULTY_BAND,
    prev_rank: float = 0.0,
    prev_windows: int = 0,
) -> AssessmentReport:
    """Assess one set of same-window summaries.

    Reference Z per variable comes from its reference curve when one
    exists, else from the variable's registered fallback. Performance is
    computed only for variables with a curve and a positive expectation at
    the window's closing tick; others contribute difficulty alone. The
    global pair aggregates orientation-normalized difficulty, so a
    higher-is-easier variable enters with its ease.
    """
    if not windows:
        raise ValidationError("evaluate needs at least one window")
    starts = {w.window_start for w in windows}
    lens = {w.window_len for w in windows}
    if len(starts) != 1 or len(lens) != 1:
        raise ValidationError("windows must share one (start, length) pair")
    window_len = windows[0].window_len
    tick = windows[0].window_start + window_len

    per_var: dict[str, VariableAssessment] = {}
    normalized: dict[str, float] = {}
    perf_values: list[float] = []
    for w in windows:
        try:
            spec = variables[w.var_id]
        except KeyError:
            raise ValidationError(f"no variable registration for {w.var_id!r}") from None
        curve = references.get(w.var_id)
        z = curve.z_per_window if curve is not None else spec.reference_z
        dv = difficulty_ratio(w.value, z, float(window_len))
        expected: float | None = None
        perf: float | None = None
        if curve is not None:
            expected = lookup(curve, tick)
            if expected > 0 and w.cumulative >= 0:
                perf = w.cumulative / expected
                perf_values.append(perf)
        if spec.orientation is Orientation.HIGHER_IS_HARDER:
            normalized[w.var_id] = dv.value
        else:
            normalized[w.var_id] = 1.0 - dv.value
        band = bands.get(w.var_id, default_band)
        if band.semantics is FlowSemantics.RATIO_CENTERED and perf is not None:
            cls = classify_flow(perf, band, spec.orientation)
        elif band.semantics is FlowSemantics.RATIO_CENTERED:
            cls = classify_flow(dv.value, DIFFICULTY_BAND, spec.orientation)
        else:
            cls = classify_flow(dv.value, band, spec.orientation)
        per_var[w.var_id] = VariableAssessment(
            var_id=w.var_id,
            n=w.value,
            z=z,
            difficulty=dv.value,
            clamped=dv.clamped,
            ease=1.0 - dv.value,
            cumulative=w.cumulative,
            expected=expected,
            performance=perf,
            classification=cls,
            orientation=spec.orientation,
        )

    proficiency = global_proficiency(
        {k: 1.0 - v for k, v in normalized.items()}, weights
    )
    mean_perf = sum(perf_values) / len(perf_values) if perf_values else None
    rank = prev_rank + (mean_perf if mean_perf is not None else 0.0)
    return AssessmentReport(
        window_start=windows[0].window_start,
        window_len=window_len,
        per_variable=per_var,
        global_difficulty=1.0 - proficiency,
        global_proficiency=proficiency,
        mean_performance=mean_perf,
        cumulative_rank=rank,
        windows_seen=prev_windows + 1,
    )
