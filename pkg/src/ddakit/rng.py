"""Seed derivation and named random streams.

Every run owns a single base seed. Subsystems (player rolls, enemy rolls,
drops, script draws) each get their own stream derived from the base seed
and a label, so adding a consumer to one stream never shifts the draws of
another. Derivation hashes ``"{base}:{label}"`` with sha256, which is stable
across platforms and Python versions.
"""

from __future__ import annotations

import hashlib
import random

__all__ = ["derive_seed", "Stream"]

_MASK = (1 << 63) - 1


def derive_seed(base: int, label: str) -> int:
    """Derive a child seed from *base* and a stream *label*."""
    digest = hashlib.sha256(f"{base}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _MASK


class Stream(random.Random):
    """A ``random.Random`` that remembers how it was seeded."""

    def __new__(cls, base: int, label: str) -> "Stream":
        # random.Random.__new__ rejects extra positional args.
        return super().__new__(cls)

    def __init__(self, base: int, label: str) -> None:
        self.base = base
        self.label = label
        self.seed_value = derive_seed(base, label)
        super().__init__(self.seed_value)

    def spawn(self, label: str) -> "Stream":
        """Derive a further stream namespaced under this one."""
        return Stream(self.seed_value, f"{self.label}/{label}")

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Stream(base={self.base}, label={self.label!r})"
