"""Short-term context ring and keyed long-term recovery records."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .strategy import StrategyTheta, serialize


@dataclass(frozen=True)
class LongTermRecord:
    key: tuple[frozenset[str], str]
    summary: str
    theta: StrategyTheta | None
    t: float


class MemoryStores:
    """Short-term: last ``m_st`` (prompt, theta) pairs. Long-term: records
    keyed by (fault-label set, scenario kind); retrieval is exact-match on the
    key, newest ``top_k`` first."""

    def __init__(self, m_st: int = 8, top_k: int = 3):
        if m_st < 1 or top_k < 1:
            raise ValueError("m_st and top_k must be >= 1")
        self.m_st = m_st
        self.top_k = top_k
        self.short_term: deque[tuple[str, StrategyTheta]] = deque(maxlen=m_st)
        self.long_term: list[LongTermRecord] = []

    def record(self, prompt_text: str, theta: StrategyTheta) -> "MemoryStores":
        self.short_term.append((prompt_text, theta))
        return self

    def record_recovery(self, labels, kind: str, theta: StrategyTheta | None,
                        summary: str, t: float = 0.0) -> "MemoryStores":
        self.long_term.append(LongTermRecord((frozenset(labels), kind), summary, theta, t))
        return self

    def retrieve(self, labels, kind: str) -> list[LongTermRecord]:
        key = (frozenset(labels), kind)
        hits = [r for r in self.long_term if r.key == key]
        return hits[::-1][: self.top_k]

    def context(self, labels=(), kind: str = "") -> list[str]:
        lines = []
        for i, (_, theta) in enumerate(self.short_term):
            flat = serialize(theta).strip().replace("\n", " | ")
            lines.append(f"recent[{i}]: {flat}")
        for r in self.retrieve(labels, kind):
            lines.append(f"recovery@{r.t:.1f}s: {r.summary}")
        return lines


def memory_record(stores: MemoryStores, prompt_text: str, theta: StrategyTheta) -> MemoryStores:
    return stores.record(prompt_text, theta)


def memory_context(stores: MemoryStores, labels=(), kind: str = "") -> list[str]:
    return stores.context(labels, kind)
