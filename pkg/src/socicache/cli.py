"""Command-line experiment runner.

Three commands: ``run`` executes one scenario, ``compare-strategies`` runs
the same trace under each selection strategy (social cache only), and
``compare-caches`` runs it under each cache setup (social-score strategy).
Config files are flat ``key=value`` text with dotted sections; precedence is
command line ``--set`` over file values over built-in defaults.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .metrics import export_rows_csv, hit_ratio
from .model import InteractionKind
from .sim import SUMMARY_COLUMNS, RunResult, compare_caches, compare_strategies, run_scenario
from .social_cache import InvalidWeightsError, SelectionTrigger, Strategy
from .workload import (
    CacheSetup,
    ConfigError,
    ScenarioConfig,
    TraceFormatError,
    TraceOrderError,
    load_trace,
)

ENV_OUT_DIR = "SOCICACHE_OUT"
DEFAULT_OUT_DIR = "socicache_out"


# -- config keys -------------------------------------------------------------

def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_int_tuple(raw: str) -> tuple[int, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(int(part) for part in raw.split(","))


def _parse_float_tuple(raw: str) -> tuple[float, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(float(part) for part in raw.split(","))


def _weight_setter(kind: InteractionKind) -> Callable[[ScenarioConfig, str], None]:
    def setter(cfg: ScenarioConfig, raw: str) -> None:
        cfg.strategy.interaction_weights[kind] = float(raw)

    return setter


def _dataset_setter(field_name: str, conv: Callable[[str], object]):
    def setter(cfg: ScenarioConfig, raw: str) -> None:
        cfg.dataset = replace(cfg.dataset, **{field_name: conv(raw)})

    return setter


_SETTERS: dict[str, Callable[[ScenarioConfig, str], None]] = {
    "peer_count": lambda c, v: setattr(c, "peer_count", int(v)),
    "friends_per_user": lambda c, v: setattr(c, "friends_per_user", int(v)),
    "new_experiment_time_days": lambda c, v: setattr(c, "new_experiment_time_days", float(v)),
    "sim_duration_ticks": lambda c, v: setattr(c, "sim_duration_ticks", int(v)),
    "friend_request_phases": lambda c, v: setattr(c, "friend_request_phases", _parse_int_tuple(v)),
    "initial_friend_fraction": lambda c, v: setattr(c, "initial_friend_fraction", float(v)),
    "cache_setup": lambda c, v: setattr(c, "cache_setup", CacheSetup(v)),
    "seed": lambda c, v: setattr(c, "seed", int(v)),
    "keys_per_user": lambda c, v: setattr(c, "keys_per_user", int(v)),
    "payload_bytes": lambda c, v: setattr(c, "payload_bytes", int(v)),
    "lookups_per_interaction": lambda c, v: setattr(c, "lookups_per_interaction", float(v)),
    "tier_sizes": lambda c, v: setattr(c, "tier_sizes", _parse_int_tuple(v)),
    "tier_shares": lambda c, v: setattr(c, "tier_shares", _parse_float_tuple(v)),
    "replication_factor": lambda c, v: setattr(c, "replication_factor", int(v)),
    "bootstrapping": lambda c, v: setattr(c, "bootstrapping", _parse_bool(v)),
    "muc_capacity": lambda c, v: setattr(c, "muc_capacity", int(v)),
    "sample_cadence_ticks": lambda c, v: setattr(c, "sample_cadence_ticks", int(v)),
    "current_cache.ttl_ticks": lambda c, v: setattr(c.current_cache, "ttl_ticks", int(v)),
    "current_cache.capacity": lambda c, v: setattr(c.current_cache, "capacity", int(v)),
    "strategy.kind": lambda c, v: setattr(c.strategy, "kind", Strategy(v)),
    "strategy.alpha": lambda c, v: setattr(c.strategy, "alpha", float(v)),
    "strategy.beta": lambda c, v: setattr(c.strategy, "beta", float(v)),
    "strategy.n": lambda c, v: setattr(c.strategy, "n", int(v)),
    "strategy.m": lambda c, v: setattr(c.strategy, "m", int(v)),
    "strategy.update_interval_ticks": lambda c, v: setattr(c.strategy, "update_interval", int(v)),
    "strategy.trigger": lambda c, v: setattr(c.strategy, "trigger", SelectionTrigger(v)),
    "strategy.rng_seed": lambda c, v: setattr(c.strategy, "rng_seed", int(v)),
    "dataset.total_egos": _dataset_setter("total_egos", int),
    "dataset.avg_alters": _dataset_setter("avg_alters", float),
    "dataset.avg_ts_friend_request_days": _dataset_setter("avg_ts_friend_request_days", float),
    "dataset.avg_ts_interaction_days": _dataset_setter("avg_ts_interaction_days", float),
    "dataset.experiment_span_days": _dataset_setter("experiment_span_days", float),
}
for _kind in InteractionKind:
    _SETTERS[f"strategy.weight.{_kind.value}"] = _weight_setter(_kind)


def apply_setting(cfg: ScenarioConfig, key: str, value: str) -> None:
    setter = _SETTERS.get(key)
    if setter is None:
        raise ConfigError(f"unknown config key: {key}")
    try:
        setter(cfg, value)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def parse_config_file(path: Path) -> list[tuple[str, str]]:
    items: list[tuple[str, str]] = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
        items.append((key.strip(), value.strip()))
    return items


def serialize_config(cfg: ScenarioConfig) -> dict[str, str]:
    """Resolved config as the same flat keys the parser accepts."""
    out = {
        "peer_count": str(cfg.peer_count),
        "friends_per_user": str(cfg.friends_per_user),
        "new_experiment_time_days": repr(cfg.new_experiment_time_days),
        "sim_duration_ticks": str(cfg.duration),
        "friend_request_phases": ",".join(str(p) for p in cfg.phases),
        "initial_friend_fraction": repr(cfg.initial_friend_fraction),
        "cache_setup": cfg.cache_setup.value,
        "seed": str(cfg.seed),
        "keys_per_user": str(cfg.keys_per_user),
        "payload_bytes": str(cfg.payload_bytes),
        "lookups_per_interaction": repr(cfg.lookups_per_interaction),
        "tier_sizes": ",".join(str(s) for s in cfg.tier_sizes),
        "tier_shares": ",".join(repr(s) for s in cfg.tier_shares),
        "replication_factor": str(cfg.replication_factor),
        "bootstrapping": str(cfg.bootstrapping).lower(),
        "muc_capacity": str(cfg.muc_capacity),
        "sample_cadence_ticks": str(cfg.sample_cadence_ticks),
        "current_cache.ttl_ticks": str(cfg.current_cache.ttl_ticks),
        "current_cache.capacity": str(cfg.current_cache.capacity),
        "strategy.kind": cfg.strategy.kind.value,
        "strategy.alpha": repr(cfg.strategy.alpha),
        "strategy.beta": repr(cfg.strategy.beta),
        "strategy.n": str(cfg.strategy.n),
        "strategy.m": str(cfg.strategy.m),
        "strategy.update_interval_ticks": str(cfg.strategy.update_interval),
        "strategy.trigger": cfg.strategy.trigger.value,
        "dataset.total_egos": str(cfg.dataset.total_egos),
        "dataset.avg_alters": repr(cfg.dataset.avg_alters),
        "dataset.avg_ts_friend_request_days": repr(cfg.dataset.avg_ts_friend_request_days),
        "dataset.avg_ts_interaction_days": repr(cfg.dataset.avg_ts_interaction_days),
        "dataset.experiment_span_days": repr(cfg.dataset.experiment_span_days),
    }
    if cfg.strategy.rng_seed is not None:
        out["strategy.rng_seed"] = str(cfg.strategy.rng_seed)
    for kind in InteractionKind:
        out[f"strategy.weight.{kind.value}"] = repr(
            cfg.strategy.interaction_weights.get(kind, 1.0)
        )
    return out


@dataclass(frozen=True)
class RunManifest:
    """Identity of one invocation: the resolved config and its hash."""

    config_path: str | None
    config: ScenarioConfig
    seed: int
    output_dir: str
    run_id: str

    @classmethod
    def create(cls, config_path: Path | None, cfg: ScenarioConfig, out_dir: Path) -> "RunManifest":
        canonical = "\n".join(
            f"{key}={value}" for key, value in sorted(serialize_config(cfg).items())
        )
        run_id = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
        return cls(
            config_path=str(config_path) if config_path else None,
            config=cfg,
            seed=cfg.seed,
            output_dir=str(out_dir),
            run_id=run_id,
        )

    def write(self, path: Path) -> None:
        payload = {
            "run_id": self.run_id,
            "seed": self.seed,
            "config_path": self.config_path,
            "output_dir": self.output_dir,
            "config": serialize_config(self.config),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- command plumbing ---------------------------------------------------------

def default_run_profile() -> ScenarioConfig:
    return ScenarioConfig()


def strategy_comparison_profile() -> ScenarioConfig:
    return ScenarioConfig(new_experiment_time_days=0.25, cache_setup=CacheSetup.SOCIAL_ONLY)


def cache_comparison_profile() -> ScenarioConfig:
    return ScenarioConfig(new_experiment_time_days=2.0, cache_setup=CacheSetup.BOTH)


def resolve_config(args: argparse.Namespace, profile: Callable[[], ScenarioConfig]) -> ScenarioConfig:
    cfg = profile()
    if args.config is not None:
        for key, value in parse_config_file(args.config):
            apply_setting(cfg, key, value)
    for override in args.overrides:
        key, sep, value = override.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {override!r}")
        apply_setting(cfg, key.strip(), value.strip())
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    return cfg


def resolve_out_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(ENV_OUT_DIR, DEFAULT_OUT_DIR))


def _load_optional_trace(args: argparse.Namespace):
    if args.trace is None:
        return None
    return load_trace(args.trace)


def write_run_outputs(result: RunResult, out_dir: Path, run_id: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    result.ledger.export_csv(out_dir / "metrics.csv")
    row = {"run_id": run_id, **result.summary}
    export_rows_csv(out_dir / "summary.csv", ("run_id",) + SUMMARY_COLUMNS, [row])


def _print_summary_line(result: RunResult) -> None:
    ratio = result.summary["cache_hit_ratio"]
    ratio_text = "undefined" if ratio is None else f"{ratio:.4f}"
    print(
        f"{result.label}: requests={result.summary['total_requests']} "
        f"cache={result.summary['social_hits'] + result.summary['current_hits']} "
        f"overlay={result.summary['overlay_replies']} hit_ratio={ratio_text}"
    )


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args, default_run_profile)
    out_dir = resolve_out_dir(args)
    manifest = RunManifest.create(args.config, cfg, out_dir)
    result = run_scenario(cfg, trace=_load_optional_trace(args), label="run")
    write_run_outputs(result, out_dir, manifest.run_id)
    manifest.write(out_dir / "manifest.json")
    _print_summary_line(result)
    return 0


def _comparison_common(args: argparse.Namespace, profile, runner, table_writer) -> int:
    cfg = resolve_config(args, profile)
    out_dir = resolve_out_dir(args)
    manifest = RunManifest.create(args.config, cfg, out_dir)
    results = runner(cfg, trace=_load_optional_trace(args))
    out_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        write_run_outputs(result, out_dir / result.label, manifest.run_id)
        _print_summary_line(result)
    table_writer(results, out_dir)
    manifest.write(out_dir / "manifest.json")
    return 0


def _write_strategy_table(results: list[RunResult], out_dir: Path) -> None:
    columns = ("strategy", "cache_replies", "overlay_replies", "total_replies", "hit_ratio")
    rows = []
    for result in results:
        s = result.summary
        cache_replies = s["social_hits"] + s["current_hits"]
        total = cache_replies + s["overlay_replies"]
        rows.append(
            {
                "strategy": s["strategy"],
                "cache_replies": cache_replies,
                "overlay_replies": s["overlay_replies"],
                "total_replies": total,
                "hit_ratio": hit_ratio(cache_replies, total),
            }
        )
    export_rows_csv(out_dir / "comparison.csv", columns, rows)


def _write_cache_table(results: list[RunResult], out_dir: Path) -> None:
    columns = (
        "cache_setup",
        "current_replies",
        "social_replies",
        "overlay_replies",
        "total_replies",
        "hit_ratio",
        "current_items",
        "social_items",
        "total_items",
        "responses_per_item",
    )
    rows = []
    for result in results:
        s = result.summary
        cache_replies = s["social_hits"] + s["current_hits"]
        total = cache_replies + s["overlay_replies"]
        per_item = None
        if s["total_cache_items"]:
            per_item = cache_replies / s["total_cache_items"]
        rows.append(
            {
                "cache_setup": s["cache_setup"],
                "current_replies": s["current_hits"],
                "social_replies": s["social_hits"],
                "overlay_replies": s["overlay_replies"],
                "total_replies": total,
                "hit_ratio": hit_ratio(cache_replies, total),
                "current_items": s["current_cache_items"],
                "social_items": s["social_cache_items"],
                "total_items": s["total_cache_items"],
                "responses_per_item": per_item,
            }
        )
    export_rows_csv(out_dir / "comparison.csv", columns, rows)


def cmd_compare_strategies(args: argparse.Namespace) -> int:
    return _comparison_common(
        args, strategy_comparison_profile, compare_strategies, _write_strategy_table
    )


def cmd_compare_caches(args: argparse.Namespace) -> int:
    return _comparison_common(
        args, cache_comparison_profile, compare_caches, _write_cache_table
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socicache",
        description="Simulate social + TTL/LRU caching over a DHT-backed social network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = (
        ("run", cmd_run, "run one scenario"),
        ("compare-strategies", cmd_compare_strategies,
         "run the three selection strategies on one trace"),
        ("compare-caches", cmd_compare_caches,
         "run the four cache setups on one trace"),
    )
    for name, fn, help_text in commands:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", type=Path, default=None, help="key=value config file")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default ${ENV_OUT_DIR} or ./{DEFAULT_OUT_DIR})")
        sp.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override one config key (repeatable)")
        sp.add_argument("--trace", type=Path, default=None,
                        help="replay a trace file instead of generating one")
        sp.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError, TraceOrderError, InvalidWeightsError) as exc:
        print(f"socicache: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive runtime guard
        print(f"socicache: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
