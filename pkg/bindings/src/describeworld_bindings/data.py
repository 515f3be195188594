"""Exported dataset files: streaming reader, record views, length tools.

A dataset file is line-delimited JSON: one header object, then one
episode record per line. The reader validates the header and yields
thin views over the parsed records; nothing is rewritten on the way
through, so re-encoding a view reproduces its line exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

SCHEMA_VERSION = 1


class DatasetError(ValueError):
    """Unsupported schema, wrong kind, or malformed records."""


@dataclass(frozen=True, eq=False)
class EpisodeRecord:
    """Read-only view over one exported episode."""

    raw: dict

    @property
    def task(self) -> str:
        return self.raw["task"]

    @property
    def task_id(self) -> str:
        return self.raw["task_id"]

    @property
    def goal_id(self) -> str:
        return self.raw["goal_id"]

    @property
    def mode(self) -> str:
        return self.raw["mode"]

    @property
    def outcome(self) -> str:
        return self.raw["outcome"]

    @property
    def length(self) -> int:
        return self.raw["length"]

    @property
    def total_reward(self) -> int:
        return self.raw["total_reward"]

    @property
    def description(self) -> str:
        return self.raw["description"]

    @property
    def instructions(self) -> list[str]:
        return self.raw["instructions"]

    @property
    def phrases(self) -> list[str]:
        return self.raw["phrases"]

    @property
    def map(self) -> dict:
        return self.raw["map"]

    @property
    def transitions(self) -> list[dict]:
        return self.raw["transitions"]

    # -- transition columns ------------------------------------------------------

    def actions(self) -> list[str]:
        return [tr["action"] for tr in self.transitions]

    def rewards(self) -> np.ndarray:
        return np.asarray([tr["reward"] for tr in self.transitions],
                          dtype=np.int64)

    def inventories(self) -> list[str]:
        return [tr["inventory"] for tr in self.transitions]

    def completions(self) -> list[Optional[str]]:
        return [tr.get("completed") for tr in self.transitions]


class Dataset:
    """Iterable of EpisodeRecord views plus the parsed file header."""

    def __init__(self, path: str, expect_kind: Optional[str] = None):
        self.path = path
        with open(path, "r", encoding="utf-8") as fh:
            header_line = fh.readline()
        if not header_line.strip():
            raise DatasetError("empty dataset file")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"bad header: {exc}") from None
        if header.get("schema") != SCHEMA_VERSION:
            raise DatasetError(
                f"unsupported schema {header.get('schema')!r}, "
                f"expected {SCHEMA_VERSION}")
        if expect_kind is not None and header.get("kind") != expect_kind:
            raise DatasetError(
                f"expected kind {expect_kind!r}, got {header.get('kind')!r}")
        self.header = header

    def __iter__(self) -> Iterator[EpisodeRecord]:
        with open(self.path, "r", encoding="utf-8") as fh:
            fh.readline()  # header, validated at construction
            for line in fh:
                if line.strip():
                    yield EpisodeRecord(json.loads(line))


def load_dataset(path: str, expect_kind: Optional[str] = None) -> Dataset:
    """Open a dataset for streaming; raises DatasetError on a bad header."""
    return Dataset(path, expect_kind=expect_kind)


def truncate(record: EpisodeRecord, n: int) -> EpisodeRecord:
    """View keeping only the last n transitions.

    Training-side trimming for long demonstrations. The result is not
    replayable from its initial map since the dropped prefix moved the
    world; length is updated, every other field is left verbatim.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    raw = dict(record.raw)
    tail = record.raw["transitions"][len(record.raw["transitions"]) - n:] \
        if n else []
    raw["transitions"] = list(tail)
    raw["length"] = len(tail)
    return EpisodeRecord(raw)


def length_buckets(records: Iterable[EpisodeRecord],
                   bucket_size: int) -> list[list[EpisodeRecord]]:
    """Sort records by demonstration length and chunk into buckets.

    Lengths are nondecreasing within each bucket and across bucket
    boundaries, so batching by bucket keeps similar-length episodes
    together.
    """
    if bucket_size <= 0:
        raise ValueError("bucket_size must be positive")
    ordered = sorted(records, key=lambda r: r.length)
    return [ordered[i:i + bucket_size]
            for i in range(0, len(ordered), bucket_size)]
