"""Run counters, sampled time series and CSV export.

The headline number is the cache hit ratio: replies served from any cache
tier over all answered replies.  A ratio with a zero denominator is
*undefined* (``None``) and exported as an empty cell, never as 0.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import IO, Iterable, Mapping

from .model import SimTime


class IoError(OSError):
    """Metrics output path could not be written."""


def hit_ratio(cache_replies: int, total_replies: int) -> float | None:
    """Fraction of replies answered from cache; None when nothing was
    answered."""
    if total_replies <= 0:
        return None
    return cache_replies / total_replies


def responses_per_item(cache_replies: int, items: int) -> float | None:
    """Cache replies per cached item; None for an empty cache."""
    if items <= 0:
        return None
    return cache_replies / items


@dataclass(slots=True)
class Counters:
    """Final counters of one run."""

    social_hits: int = 0
    current_hits: int = 0
    overlay_replies: int = 0
    total_requests: int = 0
    subscriptions_sent: int = 0
    unsubscriptions_sent: int = 0
    bootstrap_dumps: int = 0
    dispatcher_messages: int = 0
    dht_lookups: int = 0
    dht_puts: int = 0
    bytes_read: int = 0
    bytes_written: int = 0

    @property
    def answered(self) -> int:
        return self.social_hits + self.current_hits + self.overlay_replies

    @property
    def unanswered(self) -> int:
        return self.total_requests - self.answered

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"counter {f.name} is negative")
        if self.answered > self.total_requests:
            raise ValueError("answered replies exceed total requests")


def cache_hit_ratio(counters: Counters) -> float | None:
    """Hit ratio over the internally consistent total (sum of the three
    answer sources)."""
    return hit_ratio(counters.social_hits + counters.current_hits, counters.answered)


class SampledSeries:
    """Named time series sampled at a fixed cadence; times strictly
    increase."""

    def __init__(self, name: str):
        self.name = name
        self.samples: list[tuple[SimTime, float]] = []

    def append(self, now: SimTime, value: float) -> None:
        if self.samples and now <= self.samples[-1][0]:
            raise ValueError(f"sample time {now} not after {self.samples[-1][0]}")
        self.samples.append((now, value))

    def __len__(self) -> int:
        return len(self.samples)


METRICS_COLUMNS = (
    "t_ticks",
    "social_hits",
    "current_hits",
    "overlay_replies",
    "total_requests",
    "hit_ratio",
    "social_cache_items",
    "current_cache_items",
    "muc_size_mean",
    "subscriptions_sent",
    "unsubscriptions_sent",
    "bootstrap_dumps",
    "dispatcher_messages",
    "dht_lookups",
    "dht_puts",
    "bytes_read",
    "bytes_written",
)

# Float columns get a fixed textual form so equal runs export equal bytes.
_FLOAT_FORMAT = {"hit_ratio": "{:.6f}", "muc_size_mean": "{:.6f}"}


def _cell(column: str, value: object) -> str:
    if value is None:
        return ""
    fmt = _FLOAT_FORMAT.get(column)
    if fmt is not None:
        return fmt.format(value)
    return str(value)


class MetricsLedger:
    """Pipeline counters plus the sampled series of one run.

    The lookup pipeline and the social caches bump the counters directly;
    the simulation records one row per sampling step.
    """

    def __init__(self) -> None:
        self.total_requests = 0
        self.social_hits = 0
        self.current_hits = 0
        self.overlay_replies = 0
        self.unanswered = 0
        self.subscriptions_sent = 0
        self.unsubscriptions_sent = 0
        self.bootstrap_dumps = 0
        self.series: dict[str, SampledSeries] = {
            name: SampledSeries(name) for name in METRICS_COLUMNS if name != "t_ticks"
        }
        self.sample_times: list[SimTime] = []

    def record_sample(self, now: SimTime, values: Mapping[str, object]) -> None:
        unknown = set(values) - set(self.series)
        if unknown:
            raise KeyError(f"unknown metric columns: {sorted(unknown)}")
        if self.sample_times and now <= self.sample_times[-1]:
            raise ValueError("sample times must strictly increase")
        self.sample_times.append(now)
        for name, series in self.series.items():
            value = values.get(name)
            series.samples.append((now, value))  # type: ignore[arg-type]

    def export_csv(self, path) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                self.write_csv(handle)
        except OSError as exc:
            raise IoError(str(exc)) from exc

    def write_csv(self, handle: IO[str]) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for i, t in enumerate(self.sample_times):
            row = [str(t)]
            for name in METRICS_COLUMNS[1:]:
                row.append(_cell(name, self.series[name].samples[i][1]))
            writer.writerow(row)


def export_rows_csv(path, columns: Iterable[str], rows: Iterable[Mapping[str, object]]) -> None:
    """Write dict rows with a fixed column order; None becomes an empty
    cell, floats are emitted in fixed six-decimal form."""
    columns = list(columns)
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                cells = []
                for col in columns:
                    value = row.get(col)
                    if value is None:
                        cells.append("")
                    elif isinstance(value, float):
                        cells.append(f"{value:.6f}")
                    else:
                        cells.append(str(value))
                writer.writerow(cells)
    except OSError as exc:
        raise IoError(str(exc)) from exc
