"""Operation counters for group exponentiations and pairings.

Every group exponentiation and pairing evaluation performed through the
library is recorded here, keyed by an optional phase label.  Cost-profile
tests read these counters instead of wall-clock time.
"""

from __future__ import annotations

from collections import Counter
from contextlib import contextmanager

G_EXP = "g_exp"
GT_EXP = "gt_exp"
PAIRING = "pairing"


class OpCounter:
    """Tallies group operations, optionally scoped to a named phase."""

    def __init__(self) -> None:
        self.totals: Counter = Counter()
        self.by_phase: dict[str, Counter] = {}
        self._stack: list[str] = []

    def tick(self, kind: str, n: int = 1) -> None:
        self.totals[kind] += n
        if self._stack:
            self.by_phase[self._stack[-1]][kind] += n

    @contextmanager
    def phase(self, label: str):
        """Scope subsequent ticks to `label` (innermost phase wins)."""
        self.by_phase.setdefault(label, Counter())
        self._stack.append(label)
        try:
            yield self.by_phase[label]
        finally:
            self._stack.pop()

    def phase_counts(self, label: str) -> Counter:
        return self.by_phase.get(label, Counter())

    def reset(self) -> None:
        self.totals.clear()
        self.by_phase.clear()
        self._stack.clear()
