"""Independent reference implementations used to cross-check production code.

These deliberately avoid the production data structures: the cache oracle
scans lists, the scoring oracles recompute from raw event lists.
"""
from __future__ import annotations

from socicache.model import InteractionKind


class ReferenceLruTtlCache:
    """Brute-force LRU+TTL cache: recency as an explicit list, linear scans."""

    def __init__(self, capacity: int, ttl: int):
        self.capacity = capacity
        self.ttl = ttl
        self.items: list[tuple[object, object, int]] = []  # (key, value, inserted_at), LRU first

    def _find(self, key):
        for i, (k, _, _) in enumerate(self.items):
            if k == key:
                return i
        return -1

    def lookup(self, key, now):
        i = self._find(key)
        if i < 0:
            return None
        k, value, inserted_at = self.items[i]
        if now - inserted_at >= self.ttl:
            del self.items[i]
            return None
        del self.items[i]
        self.items.append((k, value, inserted_at))
        return value

    def insert(self, key, value, now):
        """Returns the evicted key, if any."""
        i = self._find(key)
        if i >= 0:
            del self.items[i]
            self.items.append((key, value, now))
            return None
        self.items.append((key, value, now))
        if len(self.items) > self.capacity:
            victim, _, _ = self.items.pop(0)
            return victim
        return None


def direct_medium_interaction_length(timestamps: list[int], now: int) -> float:
    """Literal evaluation of the normalised mean-gap score: each gap divided
    by the gap-count-minus-one term, summed, over the elapsed span."""
    count = len(timestamps)
    if count < 2:
        return 0.0
    elapsed = now - timestamps[0]
    if elapsed <= 0:
        return 0.0
    divisor = max(count - 2, 1)
    total = 0.0
    for i in range(1, count):
        total += (timestamps[i] - timestamps[i - 1]) / divisor
    return total / elapsed


def direct_tie_strength(events_by_user: dict[str, list[InteractionKind]],
                        user: str, weights: dict[InteractionKind, float]) -> float:
    total = sum(len(evs) for evs in events_by_user.values())
    if total == 0:
        return 0.0
    return sum(weights.get(kind, 1.0) for kind in events_by_user[user]) / total


def brute_force_top_n(scores: dict[str, float], n: int) -> list[str]:
    """Highest score first, ties by ascending name; used against both
    strategies' rankings."""
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [user for user, _ in ordered[:n]]
