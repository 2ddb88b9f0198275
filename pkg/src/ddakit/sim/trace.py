"""Episode traces: an append-only JSONL record stream.

Records are plain dicts with a ``t`` type field. Serialization is
canonical (sorted keys, compact separators, no wall-clock anywhere), so
two runs with identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import os

from ..errors import ConfigError

__all__ = ["TRACE_SCHEMA", "EpisodeTrace"]

TRACE_SCHEMA = 1


class EpisodeTrace:
    """In-memory list of trace records with JSONL persistence."""

    def __init__(self, records: list[dict] | None = None) -> None:
        self.records: list[dict] = records if records is not None else []

    def add(self, record: dict) -> None:
        self.records.append(record)

    def extend(self, records: list[dict]) -> None:
        self.records.extend(records)

    def records_of_type(self, record_type: str) -> list[dict]:
        return [r for r in self.records if r.get("t") == record_type]

    @property
    def header(self) -> dict:
        if not self.records or self.records[0].get("t") != "header":
            raise ConfigError("trace has no header record")
        return self.records[0]

    def dumps(self) -> str:
        lines = [
            json.dumps(r, sort_keys=True, separators=(",", ":"))
            for r in self.records
        ]
        return "\n".join(lines) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "EpisodeTrace":
        records: list[dict] = []
        try:
            with open(path, "r", encoding="utf-8") as fh:
                for i, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        records.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise ConfigError(
                            f"{path}:{i}: not valid JSON: {exc}"
                        ) from None
        except FileNotFoundError:
            raise ConfigError(f"trace file not found: {path}") from None
        trace = cls(records)
        header = trace.header
        if header.get("v") != TRACE_SCHEMA:
            raise ConfigError(
                f"{path}: unsupported trace schema {header.get('v')!r}, "
                f"expected {TRACE_SCHEMA}"
            )
        return trace
