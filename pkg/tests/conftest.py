"""Shared test helpers.

Most tests build their own tiny inputs inline; what lives here is the
handful of pieces several modules need: a dict-backed factor store and a
factory for minimal assessment reports.
"""

from __future__ import annotations

import pytest

from ddakit.assessment import (
    AssessmentReport,
    FlowClass,
    VariableAssessment,
)
from ddakit.telemetry import Orientation


class DictFactors:
    """Minimal FactorStore: a plain dict, KeyError on unknown ids."""

    def __init__(self, values: dict[str, float]) -> None:
        self.values = dict(values)
        self.set_calls: list[tuple[str, float]] = []

    def get(self, factor_id: str) -> float:
        return self.values[factor_id]

    def set(self, factor_id: str, value: float) -> None:
        self.values[factor_id] = value
        self.set_calls.append((factor_id, value))


@pytest.fixture
def dict_factors():
    return DictFactors({"enemy_damage": 1.0, "enemy_count": 1.0, "potion_drop_prob": 1.0})


def make_assessment(
    var_id: str,
    classification: FlowClass,
    performance: float | None = None,
    orientation: Orientation = Orientation.HIGHER_IS_HARDER,
    difficulty: float = 0.5,
) -> VariableAssessment:
    return VariableAssessment(
        var_id=var_id,
        n=difficulty * 100.0,
        z=0.0,
        difficulty=difficulty,
        clamped=False,
        ease=1.0 - difficulty,
        cumulative=difficulty * 100.0,
        expected=None if performance is None else 100.0,
        performance=performance,
        classification=classification,
        orientation=orientation,
    )


def make_report(per_variable: dict[str, VariableAssessment]) -> AssessmentReport:
    diffs = [va.difficulty for va in per_variable.values()]
    mean_diff = sum(diffs) / len(diffs)
    perfs = [va.performance for va in per_variable.values() if va.performance is not None]
    return AssessmentReport(
        window_start=0,
        window_len=100,
        per_variable=per_variable,
        global_difficulty=mean_diff,
        global_proficiency=1.0 - mean_diff,
        mean_performance=sum(perfs) / len(perfs) if perfs else None,
        cumulative_rank=0.0,
        windows_seen=1,
    )
