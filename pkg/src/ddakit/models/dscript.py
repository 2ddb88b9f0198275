"""Dynamic scripting: weighted rule selection with conserved weights.

Each agent type owns a rule base of parameterized tactics. A script is a
small ordered draw from the base, weighted without replacement. After an
encounter the script's rules are rewarded or penalized around a break-even
fitness, the total weight mass is conserved by redistributing the balance
over the other rules, and an adrenaline-rush guard shrinks the learning
rate while the player's own results plateau.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum

from ..errors import DomainError, ScriptGenerationError, ValidationError

__all__ = [
    "Rule",
    "RuleBase",
    "Script",
    "Regime",
    "FitnessMode",
    "EncounterResult",
    "LearningState",
    "generate_script",
    "encounter_fitness",
    "update_weights",
    "adrenaline_rush_step",
]


@dataclass(frozen=True)
class Rule:
    """One tactic: an id plus free-form numeric parameters for the game."""

    rule_id: str
    params: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class RuleBase:
    """All rules of one agent type together with their selection weights.

    ``weight_cap`` is the clipping ceiling W. Under the clipping regime no
    weight may exceed it; under top culling weights may grow past it but
    such rules become ineligible for new scripts.
    """

    agent_type: str
    rules: tuple[Rule, ...]
    weights: dict[str, float]
    weight_floor: float = 0.05
    weight_cap: float = 5.0

    def __post_init__(self) -> None:
        ids = [r.rule_id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"{self.agent_type}: duplicate rule ids")
        if set(ids) != set(self.weights):
            raise ValidationError(
                f"{self.agent_type}: weights must cover exactly the rule ids"
            )
        if self.weight_floor < 0:
            raise DomainError(f"weight_floor must be >= 0, got {self.weight_floor}")
        if self.weight_cap <= self.weight_floor:
            raise DomainError(
                f"weight_cap {self.weight_cap} must exceed floor {self.weight_floor}"
            )
        for rid, w in self.weights.items():
            if w < self.weight_floor:
                raise ValidationError(
                    f"{self.agent_type}: weight of {rid} is {w}, "
                    f"below floor {self.weight_floor}"
                )

    @property
    def total_weight(self) -> float:
        return sum(self.weights.values())

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise ValidationError(f"{self.agent_type}: no rule {rule_id!r}")

    def with_weights(self, weights: dict[str, float]) -> "RuleBase":
        return replace(self, weights=weights)


@dataclass(frozen=True)
class Script:
    agent_id: str
    rule_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.rule_ids)) != len(self.rule_ids):
            raise ValidationError("script rules must be distinct")


class Regime(Enum):
    """Weight-runaway safeguard.

    CLIPPING clamps weights at the cap both during updates and, trivially,
    during selection. TOP_CULLING lets weights grow but excludes rules
    above the cap from script generation.
    """

    CLIPPING = "clipping"
    TOP_CULLING = "topculling"


class FitnessMode(Enum):
    MAXIMIZE = "maximize"
    DIFFERENCE_MIN = "difference"


@dataclass(frozen=True, slots=True)
class EncounterResult:
    """Normalized outcomes of one encounter, both in [0, 1]."""

    ai_performance: float
    player_performance: float

    def __post_init__(self) -> None:
        for label, v in (
            ("ai_performance", self.ai_performance),
            ("player_performance", self.player_performance),
        ):
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{label} must be in [0, 1], got {v}")


@dataclass(frozen=True, slots=True)
class LearningState:
    """Adrenaline-rush bookkeeping for one agent type."""

    learning_limit: float = 1.0
    prev_player_fitness: float | None = None
    plateau_threshold: float = 0.05
    decay: float = 0.9
    limit_floor: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.learning_limit <= 1.0:
            raise DomainError(
                f"learning_limit must be in (0, 1], got {self.learning_limit}"
            )
        if not 0.0 < self.decay < 1.0:
            raise DomainError(f"decay must be in (0, 1), got {self.decay}")
        if not 0.0 < self.limit_floor <= 1.0:
            raise DomainError(
                f"limit_floor must be in (0, 1], got {self.limit_floor}"
            )


def generate_script(
    rulebase: RuleBase,
    size: int,
    regime: Regime,
    rng: random.Random,
    agent_id: str = "",
) -> Script:
    """Draw ``size`` distinct rules, weighted, without replacement."""
    if size < 1:
        raise DomainError(f"script size must be >= 1, got {size}")
    if regime is Regime.TOP_CULLING:
        pool = [
            (r.rule_id, rulebase.weights[r.rule_id])
            for r in rulebase.rules
            if rulebase.weights[r.rule_id] <= rulebase.weight_cap
        ]
    else:
        pool = [(r.rule_id, rulebase.weights[r.rule_id]) for r in rulebase.rules]
    pool = [(rid, w) for rid, w in pool if w > 0.0]
    if len(pool) < size:
        raise ScriptGenerationError(
            f"{rulebase.agent_type}: need {size} eligible rules, "
            f"have {len(pool)}"
        )
    picked: list[str] = []
    total = sum(w for _, w in pool)
    for _ in range(size):
        r = rng.random() * total
        acc = 0.0
        chosen = len(pool) - 1  # float-edge fallback: the last candidate
        for i, (_, w) in enumerate(pool):
            acc += w
            if r < acc:
                chosen = i
                break
        rid, w = pool.pop(chosen)
        picked.append(rid)
        total -= w
    return Script(agent_id=agent_id, rule_ids=tuple(picked))


def encounter_fitness(result: EncounterResult, mode: FitnessMode) -> float:
    """Score an encounter from the AI's point of view.

    MAXIMIZE wants the AI to do as well as possible. DIFFERENCE_MIN wants
    the AI to match the player, peaking when both performed alike.
    """
    if mode is FitnessMode.MAXIMIZE:
        return result.ai_performance
    return 1.0 - abs(result.ai_performance - result.player_performance)


def _spread(
    weights: dict[str, float],
    ids: list[str],
    amount: float,
    floor: float,
    cap: float,
) -> float:
    """Spread ``amount`` uniformly over ``ids``, clamping each weight.

    Returns whatever could not be absorbed because weights pinned at the
    floor or the cap.
    """
    active = list(ids)
    remaining = amount
    while abs(remaining) > 1e-12 and active:
        share = remaining / len(active)
        still_active: list[str] = []
        leftover = 0.0
        for rid in active:
            target = weights[rid] + share
            clamped = min(max(target, floor), cap)
            weights[rid] = clamped
            if abs(target - clamped) > 0.0:
                leftover += target - clamped
            else:
                still_active.append(rid)
        remaining = leftover
        active = still_active
    return remaining


def update_weights(
    rulebase: RuleBase,
    script: Script,
    fitness: float,
    *,
    break_even: float = 0.5,
    max_reward: float = 0.3,
    max_penalty: float = 0.3,
    learning_limit: float = 1.0,
    regime: Regime = Regime.CLIPPING,
) -> RuleBase:
    """Reward or penalize a script's rules, conserving total weight.

    Fitness above break-even moves every script rule up by
    ``learning_limit * max_reward * (fitness - b) / (1 - b)``; below, down
    by ``learning_limit * max_penalty * (b - fitness) / b``. The opposite
    balance is redistributed uniformly over the rules outside the script,
    spilling back into the script's rules only when everything else has
    pinned at a bound, so the total weight stays exactly put.
    """
    if not 0.0 <= fitness <= 1.0:
        raise DomainError(f"fitness must be in [0, 1], got {fitness}")
    if not 0.0 < break_even < 1.0:
        raise DomainError(f"break_even must be in (0, 1), got {break_even}")
    if max_reward < 0 or max_penalty < 0:
        raise DomainError("max_reward and max_penalty must be >= 0")
    if not 0.0 < learning_limit <= 1.0:
        raise DomainError(
            f"learning_limit must be in (0, 1], got {learning_limit}"
        )
    in_script = list(script.rule_ids)
    known = set(rulebase.weights)
    unknown = [rid for rid in in_script if rid not in known]
    if unknown:
        raise ValidationError(
            f"{rulebase.agent_type}: script names unknown rule(s) "
            + ", ".join(unknown)
        )
    if fitness == break_even:
        return rulebase.with_weights(dict(rulebase.weights))

    if fitness > break_even:
        delta = learning_limit * max_reward * (fitness - break_even) / (1.0 - break_even)
    else:
        delta = -learning_limit * max_penalty * (break_even - fitness) / break_even

    floor = rulebase.weight_floor
    cap = rulebase.weight_cap if regime is Regime.CLIPPING else float("inf")
    weights = dict(rulebase.weights)
    total_before = sum(weights.values())
    for rid in in_script:
        weights[rid] = min(max(weights[rid] + delta, floor), cap)

    balance = total_before - sum(weights.values())
    out_script = [rid for rid in weights if rid not in set(in_script)]
    balance = _spread(weights, out_script, balance, floor, cap)
    if abs(balance) > 1e-12:
        balance = _spread(weights, in_script, balance, floor, cap)
    if abs(balance) > 1e-9:
        raise ValidationError(
            f"{rulebase.agent_type}: weight mass {balance} could not be "
            "conserved; floor/cap leave no room"
        )
    # Absorb float dust so the conservation invariant holds exactly.
    drift = total_before - sum(weights.values())
    if drift != 0.0:
        for rid, w in weights.items():
            if floor < w + drift < cap:
                weights[rid] = w + drift
                break
    return rulebase.with_weights(weights)


def adrenaline_rush_step(
    state: LearningState, player_fitness: float
) -> LearningState:
    """Decay the learning limit while the player's fitness plateaus.

    A change of less than ``plateau_threshold`` against the previous
    encounter multiplies the limit by ``decay`` (never below the floor).
    The limit never rises again within an episode; a plateau means the
    player has settled and the scripts should stop churning.
    """
    if not 0.0 <= player_fitness <= 1.0:
        raise DomainError(
            f"player_fitness must be in [0, 1], got {player_fitness}"
        )
    limit = state.learning_limit
    if state.prev_player_fitness is not None:
        if abs(player_fitness - state.prev_player_fitness) < state.plateau_threshold:
            limit = max(state.limit_floor, limit * state.decay)
    return replace(state, learning_limit=limit, prev_player_fitness=player_fitness)
