"""Metrics model: a weight matrix from variables to factor multipliers.

The model keeps one multiplier per adjustable factor. After each window
assessment, every (variable, factor) entry of the matrix contributes
``weight * signal`` to the factor's multiplier, where the signal expresses
how far the variable sits from its flow band. Changed multipliers are
emitted as Set requests so the queue can carry them to the game.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from ..adjustment import ChangeKind, ChangeRequest, Visibility
from ..assessment import AssessmentReport, FlowClass
from ..errors import DomainError, UnknownVariableError, ValidationError
from ..telemetry import Orientation

__all__ = [
    "SignalMode",
    "Composition",
    "WeightMatrix",
    "Multipliers",
    "metrics_update",
]


class SignalMode(Enum):
    """How a variable's assessment becomes a scalar signal.

    THRESHOLD looks only at the flow classification: +1 when the game is
    too easy, -1 when too hard, 0 inside the band. RATIO uses the distance
    of the performance ratio from 1, oriented so positive still means
    "player is ahead, push difficulty up".
    """

    THRESHOLD = "threshold"
    RATIO = "ratio"


class Composition(Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True, slots=True)
class WeightMatrix:
    """Sparse (variable, factor) -> weight couplings plus a signal mode."""

    entries: Mapping[tuple[str, str], float]
    mode: SignalMode = SignalMode.THRESHOLD

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValidationError("weight matrix needs at least one entry")
        for (var_id, factor_id), w in self.entries.items():
            if not var_id or not factor_id:
                raise ValidationError("matrix keys must be non-empty ids")
            if w != w:  # NaN guard
                raise DomainError(f"weight for ({var_id}, {factor_id}) is NaN")

    @property
    def variables(self) -> set[str]:
        return {v for v, _ in self.entries}

    @property
    def factors(self) -> set[str]:
        return {f for _, f in self.entries}


@dataclass(slots=True)
class Multipliers:
    """Current multiplier per factor with per-factor clamp bounds."""

    values: dict[str, float]
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def bound_for(self, factor_id: str) -> tuple[float, float]:
        return self.bounds.get(factor_id, (0.0, float("inf")))

    def copy(self) -> "Multipliers":
        return Multipliers(dict(self.values), dict(self.bounds))


def _signal(report: AssessmentReport, var_id: str, mode: SignalMode) -> float:
    try:
        va = report.per_variable[var_id]
    except KeyError:
        raise UnknownVariableError(var_id, list(report.per_variable)) from None
    if mode is SignalMode.THRESHOLD:
        if va.classification is FlowClass.TOO_EASY:
            return 1.0
        if va.classification is FlowClass.TOO_HARD:
            return -1.0
        return 0.0
    # RATIO: positive when the player outpaces the reference.
    if va.performance is None:
        return 0.0
    sign = 1.0 if va.orientation is Orientation.HIGHER_IS_EASIER else -1.0
    return sign * (va.performance - 1.0)


def metrics_update(
    report: AssessmentReport,
    matrix: WeightMatrix,
    multipliers: Multipliers,
    now: int,
    composition: Composition = Composition.ADDITIVE,
) -> tuple[Multipliers, list[ChangeRequest]]:
    """Fold one assessment into the multipliers.

    Returns the updated multipliers plus one Set request per factor whose
    value actually moved. The model's multiplier is the intent; the request
    carries it to the factor store under tag ``metrics:<factor>``.
    """
    for factor_id in matrix.factors:
        if factor_id not in multipliers.values:
            raise ValidationError(
                f"matrix adjusts factor {factor_id!r} which has no multiplier"
            )
    deltas: dict[str, float] = {}
    for (var_id, factor_id), w in matrix.entries.items():
        s = _signal(report, var_id, matrix.mode)
        if s == 0.0 or w == 0.0:
            continue
        deltas[factor_id] = deltas.get(factor_id, 0.0) + w * s

    updated = multipliers.copy()
    requests: list[ChangeRequest] = []
    for factor_id in sorted(deltas):
        old = updated.values[factor_id]
        if composition is Composition.ADDITIVE:
            new = old + deltas[factor_id]
        else:
            new = old * (1.0 + deltas[factor_id])
        lo, hi = updated.bound_for(factor_id)
        new = min(max(new, lo), hi)
        if abs(new - old) <= 1e-12:
            continue
        updated.values[factor_id] = new
        requests.append(
            ChangeRequest(
                tag=f"metrics:{factor_id}",
                factor_id=factor_id,
                kind=ChangeKind.SET,
                amount=new,
                bounds=(lo, hi),
                visibility=Visibility.SUBTLE_ANYTIME,
                issued_tick=now,
            )
        )
    return updated, requests
