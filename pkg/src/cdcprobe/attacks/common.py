"""Shared attack machinery: shard specs, work counters, and the report
format every attack emits.

Search loops declare a deterministic candidate index space; a shard is
a contiguous slice of that space, so any partition evaluated in any
order merges back (counters add, accepted candidates union by ascending
index) to exactly the unsharded result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field


class AttackExhaustedError(RuntimeError):
    """The search space was exhausted without an accepted candidate."""


@dataclass(frozen=True)
class ShardSpec:
    index: int = 0
    total: int = 1

    def __post_init__(self):
        if not 0 <= self.index < self.total:
            raise ValueError("need 0 <= index < total")

    @classmethod
    def parse(cls, text: str) -> "ShardSpec":
        i, _, n = text.partition("/")
        if not _:
            raise ValueError("shard spec must look like i/N")
        return cls(int(i), int(n))

    def bounds(self, n: int) -> tuple[int, int]:
        """Contiguous slice of an n-element index space."""
        return (self.index * n) // self.total, ((self.index + 1) * n) // self.total

    def __str__(self):
        return f"{self.index}/{self.total}"


@dataclass
class AttackReport:
    attack: str
    scheme: str
    profile: str
    shard: ShardSpec = field(default_factory=ShardSpec)
    clashes_used: int = 0
    candidates_enumerated: int = 0
    closed_form_work: int = 0
    consistency_passed: int = 0
    consistency_failed: int = 0
    wall_clock_s: float = 0.0
    full_scale_log2: float | None = None
    recovered: dict[str, str] = field(default_factory=dict)
    accepted: list[tuple] = field(default_factory=list)  # candidate tuples, ascending index
    notes: list[str] = field(default_factory=list)
    extra: dict[str, str] = field(default_factory=dict)

    def serialize(self) -> str:
        lines = [
            "cdcprobe-attack-report-v1",
            f"attack={self.attack}",
            f"scheme={self.scheme}",
            f"profile={self.profile}",
            f"shard={self.shard}",
            f"clashes_used={self.clashes_used}",
            f"candidates_enumerated={self.candidates_enumerated}",
            f"closed_form_work={self.closed_form_work}",
            f"consistency_passed={self.consistency_passed}",
            f"consistency_failed={self.consistency_failed}",
            f"wall_clock_s={self.wall_clock_s:.3f}",
        ]
        if self.full_scale_log2 is not None:
            lines.append(f"full_scale_work_log2={self.full_scale_log2:.1f}")
        for key, val in sorted(self.recovered.items()):
            lines.append(f"recovered.{key}={val}")
        for key, val in sorted(self.extra.items()):
            lines.append(f"{key}={val}")
        for note in self.notes:
            lines.append(f"note={note}")
        return "\n".join(lines) + "\n"


class Stopwatch:
    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self._t0
        return False
