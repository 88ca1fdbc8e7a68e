"""Per-peer "current" cache: fixed-validity entries evicted least recently
used first, plus the result type of the unified lookup pipeline."""
from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass

from .model import ContentObject, SimTime, StorageKey


@dataclass(frozen=True, slots=True)
class CacheEntry:
    content: ContentObject
    inserted_at: SimTime
    ttl: SimTime

    def valid_at(self, now: SimTime) -> bool:
        # Validity boundary is exclusive: an entry of age == ttl is expired.
        return now - self.inserted_at < self.ttl


class LookupSource(enum.Enum):
    SOCIAL_CACHE = "social_cache"
    CURRENT_CACHE = "current_cache"
    OVERLAY = "overlay"


@dataclass(frozen=True, slots=True)
class LookupResult:
    content: ContentObject
    source: LookupSource


class CurrentCache:
    """Bounded cache with per-entry time-to-live and LRU replacement.

    The recency order lives in the OrderedDict itself: most recently used
    entries sit at the end, the LRU victim at the front.
    """

    def __init__(self, capacity: int = 1000, ttl: SimTime = 60_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if ttl < 1:
            raise ValueError("ttl must be positive")
        self.capacity = capacity
        self.ttl = ttl
        self.entries: OrderedDict[StorageKey, CacheEntry] = OrderedDict()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, key: StorageKey, now: SimTime) -> ContentObject | None:
        entry = self.entries.get(key)
        if entry is None:
            self.misses += 1
            return None
        if not entry.valid_at(now):
            # Expired entries are dropped on access and count as misses.
            del self.entries[key]
            self.misses += 1
            return None
        self.entries.move_to_end(key)
        self.hits += 1
        return entry.content

    def insert(self, content: ContentObject, now: SimTime) -> StorageKey | None:
        """Store content, returning the evicted key if capacity was hit.

        Re-inserting a present key replaces it in place (fresh validity,
        most-recent position) and never evicts.
        """
        key = content.key
        if key in self.entries:
            self.entries[key] = CacheEntry(content, now, self.ttl)
            self.entries.move_to_end(key)
            return None
        self.entries[key] = CacheEntry(content, now, self.ttl)
        if len(self.entries) > self.capacity:
            victim, _ = self.entries.popitem(last=False)
            return victim
        return None
