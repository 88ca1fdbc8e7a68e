"""A simulated peer: the unified lookup pipeline over the enabled cache
tiers plus the authoritative write path for its own content.

Request resolution order is social cache (own content, then subscribed
content), then the current cache, then the overlay.  Interaction tracking
and the per-lookup subscription actions run after the request has been
answered, so a cold key is always served by the overlay even when the
triggered subscription would have pushed it a moment later.
"""
from __future__ import annotations

import random
from typing import Any

from .info_cache import CurrentCache, LookupResult, LookupSource
from .metrics import MetricsLedger
from .model import ContentObject, InteractionKind, SimTime, StorageKey, UserId
from .overlay import DhtStore, MessageDispatcher, MessageEnvelope, MessageKind
from .social_cache import SocialCache, StrategyConfig


class NotOwnerError(PermissionError):
    """Attempt to publish under another user's key."""


class Peer:
    def __init__(
        self,
        user: UserId,
        dht: DhtStore,
        dispatcher: MessageDispatcher,
        ledger: MetricsLedger | None = None,
        *,
        current_cache: CurrentCache | None = None,
        strategy: StrategyConfig | None = None,
        bootstrapping: bool = True,
        muc_capacity: int = 150,
        strategy_rng: random.Random | None = None,
        online: bool = True,
    ):
        self.user = user
        self.dht = dht
        self.dispatcher = dispatcher
        self.ledger = ledger if ledger is not None else MetricsLedger()
        self.current = current_cache
        self.social: SocialCache | None = None
        if strategy is not None:
            self.social = SocialCache(
                user,
                strategy,
                self._send,
                self.ledger,
                bootstrapping=bootstrapping,
                muc_capacity=muc_capacity,
                rng=strategy_rng,
            )
        self._versions: dict[StorageKey, int] = {}
        dispatcher.register(user, self.on_envelope, online=online)

    # -- outbound ---------------------------------------------------------

    def _send(self, kind: MessageKind, recipient: UserId, payload: Any, now: SimTime) -> None:
        self.dispatcher.dispatch(MessageEnvelope(self.user, recipient, kind, payload, now))

    # -- lookup pipeline ----------------------------------------------------

    def handle_request(self, key: StorageKey, now: SimTime) -> LookupResult | None:
        """Resolve a plugin request; None when the key exists nowhere."""
        self.ledger.total_requests += 1
        result = None
        if self.social is not None:
            content = self.social.lookup(key)
            if content is not None:
                self.ledger.social_hits += 1
                result = LookupResult(content, LookupSource.SOCIAL_CACHE)
        if result is None and self.current is not None:
            content = self.current.lookup(key, now)
            if content is not None:
                self.ledger.current_hits += 1
                result = LookupResult(content, LookupSource.CURRENT_CACHE)
        if result is None:
            content = self.dht.get(key)
            if content is None:
                self.ledger.unanswered += 1
                self._track(key.owner, InteractionKind.LOOKUP, now)
                return None
            self.ledger.overlay_replies += 1
            if self.current is not None:
                self.current.insert(content, now)
            result = LookupResult(content, LookupSource.OVERLAY)
        self._track(key.owner, InteractionKind.LOOKUP, now)
        return result

    def _track(self, user: UserId, kind: InteractionKind, now: SimTime) -> None:
        if self.social is not None and user != self.user:
            self.social.track(user, kind, now)

    # -- writes -------------------------------------------------------------

    def add_content(self, key: StorageKey, payload: bytes, now: SimTime) -> ContentObject:
        """Publish own content: local stores, persistent overlay write, and
        one social update per subscriber."""
        if key.owner != self.user:
            raise NotOwnerError(f"{self.user!r} cannot write {key}")
        version = self._versions.get(key, 0) + 1
        self._versions[key] = version
        content = ContentObject(key, version, payload, self.user, now)
        if self.social is not None:
            self.social.publish(content, now)
        if self.current is not None:
            self.current.insert(content, now)
        self.dht.put(content)
        return content

    def record_interaction(self, target: UserId, kind: InteractionKind, now: SimTime) -> None:
        self._track(target, kind, now)

    def send_friend_request(self, target: UserId, now: SimTime) -> None:
        """Friend requests travel as system messages and count as tracked
        interactions with the target."""
        self._send(MessageKind.SYSTEM_NOTICE, target, "friend_request", now)
        self._track(target, InteractionKind.FRIEND_REQUEST, now)

    # -- inbound ------------------------------------------------------------

    def on_envelope(self, env: MessageEnvelope) -> None:
        if self.social is None:
            return
        if env.kind is MessageKind.SUBSCRIBE:
            self.social.on_subscribe_received(env.sender, env.sent_at)
        elif env.kind is MessageKind.UNSUBSCRIBE:
            self.social.on_unsubscribe_received(env.sender)
        elif env.kind is MessageKind.SOCIAL_UPDATE:
            self.social.on_social_update(env.sender, env.payload)
        elif env.kind is MessageKind.BOOTSTRAP_DUMP:
            self.social.on_bootstrap(env.sender, env.payload)
        # System notices only notify; nothing to store.

    def on_update_interval(self, now: SimTime) -> None:
        if self.social is not None:
            self.social.on_update_interval(now)
