"""Simulated overlay: a key-value store plus a user-to-user message
dispatcher, with traffic counters read by the metrics module.

Replication is modelled only as a write-traffic multiplier; there is no
replica placement, routing or churn.  Both structures are owned by a single
simulation event loop and are not thread-safe.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from .model import ContentObject, SimTime, StorageKey, UserId


class StaleWriteError(ValueError):
    """Write with a version not above the stored version."""


class InvalidEnvelopeError(ValueError):
    """Self-addressed or otherwise undeliverable envelope."""


class DhtStore:
    """Key-value store keeping the latest object per key.

    ``bytes_written`` charges each put with payload size times the
    replication factor; ``bytes_read`` is charged per successful get.
    """

    def __init__(self, replication_factor: int = 4):
        if replication_factor < 1:
            raise ValueError("replication_factor must be positive")
        self.replication_factor = replication_factor
        self.entries: dict[StorageKey, ContentObject] = {}
        self.bytes_read = 0
        self.bytes_written = 0
        self.lookups = 0
        self.puts = 0

    def put(self, content: ContentObject) -> None:
        stored = self.entries.get(content.key)
        if stored is not None and content.version <= stored.version:
            raise StaleWriteError(
                f"version {content.version} <= stored {stored.version} for {content.key}"
            )
        self.entries[content.key] = content
        self.puts += 1
        self.bytes_written += len(content.payload) * self.replication_factor

    def get(self, key: StorageKey) -> ContentObject | None:
        """Overlay lookup; a miss is counted but is not an error."""
        self.lookups += 1
        obj = self.entries.get(key)
        if obj is not None:
            self.bytes_read += len(obj.payload)
        return obj


class MessageKind(enum.Enum):
    SUBSCRIBE = "subscribe"
    UNSUBSCRIBE = "unsubscribe"
    SOCIAL_UPDATE = "social_update"
    BOOTSTRAP_DUMP = "bootstrap_dump"
    SYSTEM_NOTICE = "system_notice"


@dataclass(frozen=True, slots=True)
class MessageEnvelope:
    """A user-addressed message; the payload is opaque to the dispatcher."""

    sender: UserId
    recipient: UserId
    kind: MessageKind
    payload: Any
    sent_at: SimTime


class DispatchResult(enum.Enum):
    DELIVERED = "delivered"
    PERSISTED = "persisted"


@dataclass
class MessageDispatcher:
    """Delivers envelopes to online users immediately (handler runs in the
    same event-loop step) and queues them FIFO for offline users.

    ``hop_latency_ticks`` is reserved configuration: the metrics of interest
    are counts, so delivery is modelled as instantaneous and only the zero
    value is exercised.
    """

    hop_latency_ticks: int = 0
    handlers: dict[UserId, Callable[[MessageEnvelope], None]] = field(default_factory=dict)
    online: dict[UserId, bool] = field(default_factory=dict)
    pending: dict[UserId, deque[MessageEnvelope]] = field(default_factory=dict)
    delivered: int = 0
    persisted: int = 0
    messages: int = 0

    def __post_init__(self) -> None:
        if self.hop_latency_ticks < 0:
            raise ValueError("hop_latency_ticks must be non-negative")

    def register(self, user: UserId, handler: Callable[[MessageEnvelope], None],
                 online: bool = True) -> None:
        self.handlers[user] = handler
        self.online[user] = online

    def dispatch(self, env: MessageEnvelope) -> DispatchResult:
        if env.sender == env.recipient:
            raise InvalidEnvelopeError(f"self-addressed envelope from {env.sender!r}")
        self.messages += 1
        if self.online.get(env.recipient, False):
            self.delivered += 1
            handler = self.handlers.get(env.recipient)
            if handler is not None:
                handler(env)
            return DispatchResult.DELIVERED
        self.pending.setdefault(env.recipient, deque()).append(env)
        self.persisted += 1
        return DispatchResult.PERSISTED

    def set_online(self, user: UserId, online: bool) -> None:
        """Going online replays any persisted envelopes in FIFO order."""
        self.online[user] = online
        if not online:
            return
        queue = self.pending.pop(user, None)
        if not queue:
            return
        # Replayed envelopes were already counted as persisted outcomes, so
        # delivered + persisted stays equal to the number of dispatch calls.
        handler = self.handlers.get(user)
        while queue:
            env = queue.popleft()
            if handler is not None:
                handler(env)

    def quiesce(self) -> None:
        """Bring every registered user online, flushing pending queues."""
        for user in list(self.handlers):
            if not self.online.get(user, False):
                self.set_online(user, True)
