"""Queued difficulty changes and the rules for applying them.

Models never touch game factors directly. They enqueue tagged
:class:`ChangeRequest` records, and the game drains the queue at moments
it declares safe (a routine mid-play update, an unseen zone, a scene
change, the player lying dead). Each request carries a visibility class
saying how disruptive it would be if applied in front of the player, and
the drain context decides which classes it will admit. A tag names the
intent of a change, and only the newest request per tag survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

from .errors import DomainError, ValidationError

__all__ = [
    "Visibility",
    "DrainContext",
    "ChangeKind",
    "ChangeRequest",
    "QueuePolicy",
    "AppliedChange",
    "DroppedChange",
    "DrainResult",
    "FactorStore",
    "ChangeQueue",
    "admits",
]


class Visibility(Enum):
    SUBTLE_ANYTIME = "subtle_anytime"
    UNSEEN_ZONE = "unseen_zone"
    REQUIRES_BREAK = "requires_break"


class DrainContext(Enum):
    SUBTLE_WINDOW = "subtle_window"
    UNSEEN_ZONE = "unseen_zone"
    SCENE_CHANGE = "scene_change"
    PLAYER_DEAD = "player_dead"


_ADMISSION: dict[Visibility, frozenset[DrainContext]] = {
    Visibility.SUBTLE_ANYTIME: frozenset(DrainContext),
    Visibility.UNSEEN_ZONE: frozenset(
        {DrainContext.UNSEEN_ZONE, DrainContext.SCENE_CHANGE, DrainContext.PLAYER_DEAD}
    ),
    Visibility.REQUIRES_BREAK: frozenset(
        {DrainContext.SCENE_CHANGE, DrainContext.PLAYER_DEAD}
    ),
}


def admits(visibility: Visibility, context: DrainContext) -> bool:
    """Whether a drain context may apply a request of this visibility."""
    return context in _ADMISSION[visibility]


class ChangeKind(Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    SET = "set"


@dataclass(frozen=True, slots=True)
class ChangeRequest:
    tag: str
    factor_id: str
    kind: ChangeKind
    amount: float
    bounds: tuple[float, float]
    visibility: Visibility
    issued_tick: int

    def __post_init__(self) -> None:
        if not self.tag:
            raise ValidationError("change tag must be non-empty")
        lo, hi = self.bounds
        if lo > hi:
            raise DomainError(f"{self.tag}: bounds ({lo}, {hi}) are inverted")

    def apply_to(self, old: float) -> float:
        if self.kind is ChangeKind.ADDITIVE:
            new = old + self.amount
        elif self.kind is ChangeKind.MULTIPLICATIVE:
            new = old * self.amount
        else:
            new = self.amount
        lo, hi = self.bounds
        return min(max(new, lo), hi)


@dataclass(frozen=True, slots=True)
class QueuePolicy:
    min_ticks_between_executions: int = 300
    max_changes_per_update: int = 4
    max_changes_per_stage: int = 16

    def __post_init__(self) -> None:
        if self.min_ticks_between_executions < 0:
            raise DomainError("min_ticks_between_executions must be >= 0")
        if self.max_changes_per_update < 1:
            raise DomainError("max_changes_per_update must be >= 1")
        if self.max_changes_per_stage < 1:
            raise DomainError("max_changes_per_stage must be >= 1")


@dataclass(frozen=True, slots=True)
class AppliedChange:
    tag: str
    factor_id: str
    old_value: float
    new_value: float
    tick: int

    def to_record(self) -> dict:
        return {
            "t": "change_applied",
            "tick": self.tick,
            "tag": self.tag,
            "factor": self.factor_id,
            "old": round(self.old_value, 9),
            "new": round(self.new_value, 9),
        }


@dataclass(frozen=True, slots=True)
class DroppedChange:
    tag: str
    factor_id: str
    reason: str
    tick: int

    def to_record(self) -> dict:
        return {
            "t": "change_dropped",
            "tick": self.tick,
            "tag": self.tag,
            "factor": self.factor_id,
            "reason": self.reason,
        }


@dataclass(slots=True)
class DrainResult:
    applied: list[AppliedChange] = field(default_factory=list)
    dropped: list[DroppedChange] = field(default_factory=list)
    gated: bool = False


class FactorStore(Protocol):
    """Anything that can read and write named game factors.

    ``get`` must raise KeyError for unknown ids. Implementations are free
    to attach arbitrary side effects to ``set``; that is the escape hatch
    for factors whose application is more involved than storing a number.
    """

    def get(self, factor_id: str) -> float: ...

    def set(self, factor_id: str, value: float) -> None: ...


class ChangeQueue:
    """Tag-deduplicated FIFO of pending difficulty changes."""

    def __init__(self) -> None:
        self._pending: list[ChangeRequest] = []
        self._last_execution_tick: int | None = None
        self._stage_count = 0

    def __len__(self) -> int:
        return len(self._pending)

    @property
    def pending(self) -> tuple[ChangeRequest, ...]:
        return tuple(self._pending)

    @property
    def stage_count(self) -> int:
        return self._stage_count

    def enqueue(self, request: ChangeRequest) -> None:
        """Add a request, replacing any pending request with the same tag.

        Replacement keeps the original queue position: the intent has been
        waiting since the first request, only its payload is newer.
        """
        for i, existing in enumerate(self._pending):
            if existing.tag == request.tag:
                self._pending[i] = request
                return
        self._pending.append(request)

    def drain(
        self,
        context: DrainContext,
        now: int,
        policy: QueuePolicy,
        factors: FactorStore,
    ) -> DrainResult:
        """Apply admitted requests in FIFO order, within policy budgets.

        A drain too soon after the last one that applied anything is gated
        and does nothing. Requests whose visibility the context does not
        admit stay queued. A request naming an unknown factor is dropped
        with a report and the drain moves on.
        """
        result = DrainResult()
        last = self._last_execution_tick
        if last is not None and now - last < policy.min_ticks_between_executions:
            result.gated = True
            return result

        kept: list[ChangeRequest] = []
        budget = min(
            policy.max_changes_per_update,
            policy.max_changes_per_stage - self._stage_count,
        )
        queue = self._pending
        for i, req in enumerate(queue):
            if budget <= 0:
                kept.extend(queue[i:])
                break
            if not admits(req.visibility, context):
                kept.append(req)
                continue
            try:
                old = factors.get(req.factor_id)
            except KeyError:
                result.dropped.append(
                    DroppedChange(req.tag, req.factor_id, "unknown_factor", now)
                )
                continue
            new = req.apply_to(old)
            factors.set(req.factor_id, new)
            result.applied.append(
                AppliedChange(req.tag, req.factor_id, old, new, now)
            )
            budget -= 1
        self._pending = kept
        if result.applied:
            self._last_execution_tick = now
            self._stage_count += len(result.applied)
        return result

    def reset_stage(self) -> None:
        """Start a new stage: the per-stage change budget refills."""
        self._stage_count = 0
