"""Single-threaded discrete-event simulation of one scenario.

Merges the trace stream with periodic selection triggers and metric
sampling.  Message delivery is synchronous (zero latency), so the system is
quiescent between events; offline peers only accumulate a persistence queue
that is flushed when the run drains.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .info_cache import CurrentCache
from .metrics import Counters, MetricsLedger, cache_hit_ratio, hit_ratio, responses_per_item
from .model import SimTime, StorageKey, UserId
from .overlay import DhtStore, MessageDispatcher
from .peer import Peer
from .social_cache import SelectionTrigger, Strategy
from .workload import (
    FRIENDREQ,
    LOOKUP,
    POST,
    CacheSetup,
    ScenarioConfig,
    TraceEvent,
    generate_trace,
    scenario_for_setup,
    scenario_for_strategy,
    trace_digest,
)

SUMMARY_COLUMNS = (
    "label",
    "strategy",
    "cache_setup",
    "seed",
    "peer_count",
    "duration_ticks",
    "trace_digest",
    "total_requests",
    "social_hits",
    "current_hits",
    "overlay_replies",
    "unanswered",
    "subscriptions_sent",
    "unsubscriptions_sent",
    "bootstrap_dumps",
    "dispatcher_messages",
    "delivered",
    "persisted",
    "dht_lookups",
    "dht_puts",
    "bytes_read",
    "bytes_written",
    "social_cache_items",
    "current_cache_items",
    "total_cache_items",
    "max_channels",
    "max_muc_entries",
    "cache_hit_ratio",
    "responses_per_item",
)


@dataclass
class RunResult:
    label: str
    config: ScenarioConfig
    trace_digest: str
    ledger: MetricsLedger
    counters: Counters
    summary: dict
    simulation: "Simulation"

    @property
    def hit_ratio(self) -> float | None:
        return self.summary["cache_hit_ratio"]


class Simulation:
    def __init__(self, cfg: ScenarioConfig, trace: list[TraceEvent], label: str = "run"):
        cfg.validate()
        self.cfg = cfg
        self.trace = trace
        self.label = label
        self.dht = DhtStore(cfg.replication_factor)
        self.dispatcher = MessageDispatcher()
        self.ledger = MetricsLedger()
        self.peers: dict[UserId, Peer] = {}
        self._keys: dict[str, StorageKey] = {}
        self._payloads: dict[int, bytes] = {}
        self.max_channels = 0
        self.max_muc_entries = 0
        self._digest = trace_digest(trace)

        setup = cfg.cache_setup
        strategy_seed = cfg.strategy.rng_seed if cfg.strategy.rng_seed is not None else cfg.seed
        for name in self._trace_users(trace):
            current = None
            if setup.current_enabled:
                current = CurrentCache(cfg.current_cache.capacity, cfg.current_cache.ttl_ticks)
            strategy = cfg.strategy if setup.social_enabled else None
            self.peers[name] = Peer(
                name,
                self.dht,
                self.dispatcher,
                self.ledger,
                current_cache=current,
                strategy=strategy,
                bootstrapping=cfg.bootstrapping,
                muc_capacity=cfg.muc_capacity,
                strategy_rng=random.Random(f"{strategy_seed}/strategy/{name}"),
            )
        self._peer_list = [self.peers[name] for name in sorted(self.peers)]

    @staticmethod
    def _trace_users(trace: list[TraceEvent]) -> list[UserId]:
        users: set[UserId] = set()
        for ev in trace:
            users.add(ev.actor)
            if ev.action == FRIENDREQ:
                users.add(ev.target)
            else:
                users.add(ev.target.split("/", 1)[0])
        return sorted(users)

    # -- event processing ---------------------------------------------------

    def _key(self, text: str) -> StorageKey:
        key = self._keys.get(text)
        if key is None:
            key = StorageKey.parse(text)
            self._keys[text] = key
        return key

    def _payload(self, size: int | None) -> bytes:
        size = size or 0
        blob = self._payloads.get(size)
        if blob is None:
            blob = bytes(size)
            self._payloads[size] = blob
        return blob

    def _apply_event(self, ev: TraceEvent) -> None:
        actor = self.peers[ev.actor]
        if ev.action == LOOKUP:
            actor.handle_request(self._key(ev.target), ev.at)
        elif ev.action == POST:
            actor.add_content(self._key(ev.target), self._payload(ev.payload_size), ev.at)
        else:
            actor.send_friend_request(ev.target, ev.at)

    def _run_selection_round(self, now: SimTime) -> None:
        for peer in self._peer_list:
            peer.on_update_interval(now)

    def _sample(self, now: SimTime) -> None:
        social_items = 0
        current_items = 0
        muc_total = 0
        social_peers = 0
        for peer in self._peer_list:
            if peer.current is not None:
                current_items += len(peer.current.entries)
            if peer.social is not None:
                social_peers += 1
                social_items += peer.social.store.item_count
                muc_total += len(peer.social.muc)
                self.max_channels = max(self.max_channels, len(peer.social.channels))
                self.max_muc_entries = max(self.max_muc_entries, len(peer.social.muc))
        ledger = self.ledger
        answered = ledger.social_hits + ledger.current_hits + ledger.overlay_replies
        ledger.record_sample(
            now,
            {
                "social_hits": ledger.social_hits,
                "current_hits": ledger.current_hits,
                "overlay_replies": ledger.overlay_replies,
                "total_requests": ledger.total_requests,
                "hit_ratio": hit_ratio(ledger.social_hits + ledger.current_hits, answered),
                "social_cache_items": social_items,
                "current_cache_items": current_items,
                "muc_size_mean": (muc_total / social_peers) if social_peers else 0.0,
                "subscriptions_sent": ledger.subscriptions_sent,
                "unsubscriptions_sent": ledger.unsubscriptions_sent,
                "bootstrap_dumps": ledger.bootstrap_dumps,
                "dispatcher_messages": self.dispatcher.messages,
                "dht_lookups": self.dht.lookups,
                "dht_puts": self.dht.puts,
                "bytes_read": self.dht.bytes_read,
                "bytes_written": self.dht.bytes_written,
            },
        )

    def run(self) -> RunResult:
        cfg = self.cfg
        duration = cfg.duration
        trace = self.trace
        interval = cfg.strategy.update_interval
        time_selection = (
            cfg.cache_setup.social_enabled
            and cfg.strategy.kind is not Strategy.RANDOM
            and cfg.strategy.trigger is SelectionTrigger.TIME_BASED
        )
        next_selection = interval if time_selection and interval <= duration else None
        cadence = cfg.sample_cadence_ticks
        next_sample = cadence if cadence <= duration else None

        i, n = 0, len(trace)
        while True:
            pending: list[tuple[int, int]] = []
            if i < n and trace[i].at <= duration:
                pending.append((trace[i].at, 0))
            if next_selection is not None:
                pending.append((next_selection, 1))
            if next_sample is not None:
                pending.append((next_sample, 2))
            if not pending:
                break
            t, kind = min(pending)
            if kind == 0:
                ev = trace[i]
                i += 1
                self._apply_event(ev)
            elif kind == 1:
                self._run_selection_round(t)
                next_selection = t + interval
                if next_selection > duration:
                    next_selection = None
            else:
                self._sample(t)
                next_sample = t + cadence
                if next_sample > duration:
                    next_sample = None

        self.dispatcher.quiesce()
        return self._result()

    # -- results ------------------------------------------------------------

    def counters(self) -> Counters:
        ledger = self.ledger
        return Counters(
            social_hits=ledger.social_hits,
            current_hits=ledger.current_hits,
            overlay_replies=ledger.overlay_replies,
            total_requests=ledger.total_requests,
            subscriptions_sent=ledger.subscriptions_sent,
            unsubscriptions_sent=ledger.unsubscriptions_sent,
            bootstrap_dumps=ledger.bootstrap_dumps,
            dispatcher_messages=self.dispatcher.messages,
            dht_lookups=self.dht.lookups,
            dht_puts=self.dht.puts,
            bytes_read=self.dht.bytes_read,
            bytes_written=self.dht.bytes_written,
        )

    def social_item_count(self) -> int:
        return sum(
            p.social.store.item_count for p in self._peer_list if p.social is not None
        )

    def current_item_count(self) -> int:
        return sum(len(p.current.entries) for p in self._peer_list if p.current is not None)

    def verify_consistency(self) -> list[str]:
        """Social-store entries whose version disagrees with the overlay, or
        that belong to users no longer subscribed."""
        violations: list[str] = []
        for name in sorted(self.peers):
            peer = self.peers[name]
            if peer.social is None:
                continue
            for user, section in peer.social.store.by_user.items():
                if user not in peer.social.channels:
                    violations.append(f"{name}: stores {user} without a subscription")
                for key, obj in section.items():
                    stored = self.dht.entries.get(key)
                    if stored is None:
                        violations.append(f"{name}: {key} missing from the overlay")
                    elif stored.version != obj.version:
                        violations.append(
                            f"{name}: {key} version {obj.version} != overlay {stored.version}"
                        )
        return violations

    def verify_subscription_symmetry(self) -> list[str]:
        """After quiescence, u subscribed to v iff v lists u as a receiver."""
        violations: list[str] = []
        for name in sorted(self.peers):
            social = self.peers[name].social
            if social is None:
                continue
            for channel in social.channels:
                other = self.peers.get(channel)
                if other is None or other.social is None:
                    continue
                if name not in other.social.receivers:
                    violations.append(f"{name} subscribes {channel} but is not a receiver")
            for receiver in social.receivers:
                other = self.peers.get(receiver)
                if other is None or other.social is None:
                    continue
                if name not in other.social.channels:
                    violations.append(f"{name} lists {receiver} without a subscription")
        return violations

    def _result(self) -> RunResult:
        for peer in self._peer_list:
            if peer.social is not None:
                self.max_channels = max(self.max_channels, len(peer.social.channels))
                self.max_muc_entries = max(self.max_muc_entries, len(peer.social.muc))
        counters = self.counters()
        social_items = self.social_item_count()
        current_items = self.current_item_count()
        total_items = social_items + current_items
        cache_replies = counters.social_hits + counters.current_hits
        summary = {
            "label": self.label,
            "strategy": self.cfg.strategy.kind.value,
            "cache_setup": self.cfg.cache_setup.value,
            "seed": self.cfg.seed,
            "peer_count": len(self.peers),
            "duration_ticks": self.cfg.duration,
            "trace_digest": self._digest[:12],
            "total_requests": counters.total_requests,
            "social_hits": counters.social_hits,
            "current_hits": counters.current_hits,
            "overlay_replies": counters.overlay_replies,
            "unanswered": counters.unanswered,
            "subscriptions_sent": counters.subscriptions_sent,
            "unsubscriptions_sent": counters.unsubscriptions_sent,
            "bootstrap_dumps": counters.bootstrap_dumps,
            "dispatcher_messages": counters.dispatcher_messages,
            "delivered": self.dispatcher.delivered,
            "persisted": self.dispatcher.persisted,
            "dht_lookups": counters.dht_lookups,
            "dht_puts": counters.dht_puts,
            "bytes_read": counters.bytes_read,
            "bytes_written": counters.bytes_written,
            "social_cache_items": social_items,
            "current_cache_items": current_items,
            "total_cache_items": total_items,
            "max_channels": self.max_channels,
            "max_muc_entries": self.max_muc_entries,
            "cache_hit_ratio": cache_hit_ratio(counters),
            "responses_per_item": responses_per_item(cache_replies, total_items),
        }
        return RunResult(
            label=self.label,
            config=self.cfg,
            trace_digest=self._digest,
            ledger=self.ledger,
            counters=counters,
            summary=summary,
            simulation=self,
        )


def run_scenario(cfg: ScenarioConfig, trace: list[TraceEvent] | None = None,
                 label: str | None = None) -> RunResult:
    cfg.validate()
    if trace is None:
        trace = generate_trace(cfg)
    return Simulation(cfg, trace, label or cfg.strategy.kind.value).run()


STRATEGY_ORDER = (Strategy.RANDOM, Strategy.TREND, Strategy.SOCIAL_SCORE)
SETUP_ORDER = (
    CacheSetup.NONE,
    CacheSetup.CURRENT_ONLY,
    CacheSetup.SOCIAL_ONLY,
    CacheSetup.BOTH,
)


def compare_strategies(cfg: ScenarioConfig,
                       trace: list[TraceEvent] | None = None) -> list[RunResult]:
    """Run the same trace once per selection strategy, social cache only."""
    base = scenario_for_setup(cfg, CacheSetup.SOCIAL_ONLY)
    base.validate()
    if trace is None:
        trace = generate_trace(base)
    return [
        run_scenario(scenario_for_strategy(base, kind), trace, label=kind.value)
        for kind in STRATEGY_ORDER
    ]


def compare_caches(cfg: ScenarioConfig,
                   trace: list[TraceEvent] | None = None) -> list[RunResult]:
    """Run the same trace once per cache setup with the social-score
    strategy."""
    base = scenario_for_strategy(cfg, Strategy.SOCIAL_SCORE)
    base.validate()
    if trace is None:
        trace = generate_trace(base)
    return [
        run_scenario(scenario_for_setup(base, setup), trace, label=setup.value)
        for setup in SETUP_ORDER
    ]
