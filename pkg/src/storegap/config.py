"""TOML run/synth configuration parsing for the CLI and service."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .demand import ExclusionParams, Target
from .geo import GeoPoint
from .ingest import DEFAULT_TZ_OFFSET_HOURS
from .learners import ModelSpec
from .synth import CityConfig, Hotspot


class ConfigError(ValueError):
    """Unusable configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    queries_path: Path
    pois_path: Path
    wifi_path: Path
    target: Target
    params: ExclusionParams
    model_spec: ModelSpec
    aliases: dict[str, str] = field(default_factory=dict)
    k: int = 10
    seed: int = 0
    out_dir: Path = Path("out")
    city_center: GeoPoint | None = None
    fallback_threshold_m: float = 1000.0
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS
    eval_protocol: str = "leave_brand_out"
    eval_category: str | None = None
    eval_test_brand: str | None = None
    eval_repeats: int = 10
    eval_test_fraction: float = 0.2
    eval_k: int | None = None  # defaults to run.k
    port: int = 8787
    threads: int = 4


def _load_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def load_run_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    doc = _load_toml(path)
    overrides = overrides or {}
    base = Path(path).parent
    try:
        data = doc["data"]
        target = doc["target"]
        run = doc.get("run", {})
        params = ExclusionParams(**doc.get("params", {}))
        model_doc = dict(doc.get("model", {"kind": "rf"}))
        model_spec = ModelSpec.from_dict(model_doc)
        eval_doc = doc.get("eval", {})
        center = run.get("city_center")
        cfg = RunConfig(
            queries_path=base / data["queries"],
            pois_path=base / data["pois"],
            wifi_path=base / data["wifi"],
            target=Target(kind=target["kind"], name=target["name"]),
            params=params,
            model_spec=model_spec,
            aliases=dict(doc.get("aliases", {})),
            k=int(run.get("k", 10)),
            seed=int(run.get("seed", 0)),
            out_dir=Path(run.get("out", "out")),
            city_center=GeoPoint(center[0], center[1]) if center else None,
            fallback_threshold_m=float(run.get("fallback_threshold_m", 1000.0)),
            tz_offset_hours=int(run.get("tz_offset_hours", DEFAULT_TZ_OFFSET_HOURS)),
            eval_protocol=str(eval_doc.get("protocol", "leave_brand_out")),
            eval_category=eval_doc.get("category"),
            eval_test_brand=eval_doc.get("test_brand"),
            eval_repeats=int(eval_doc.get("repeats", 10)),
            eval_test_fraction=float(eval_doc.get("test_fraction", 0.2)),
            eval_k=int(eval_doc["k"]) if "k" in eval_doc else None,
            port=int(run.get("port", 8787)),
            threads=int(run.get("threads", 4)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad run config {path}: {exc}") from exc
    if "seed" in overrides and overrides["seed"] is not None:
        cfg.seed = int(overrides["seed"])
        cfg.model_spec = ModelSpec.from_dict({**cfg.model_spec.to_dict(), "seed": cfg.seed})
    if overrides.get("out") is not None:
        cfg.out_dir = Path(overrides["out"])
    if overrides.get("threads") is not None:
        cfg.threads = int(overrides["threads"])
    if cfg.eval_protocol not in ("leave_brand_out", "specific_split"):
        raise ConfigError(f"unknown eval protocol {cfg.eval_protocol!r}")
    return cfg


def load_city_config(path: str | Path, seed_override: int | None = None) -> CityConfig:
    doc = _load_toml(path)
    try:
        hotspots = [
            Hotspot(
                lat=float(h["lat"]),
                lng=float(h["lng"]),
                spread_m=float(h.get("spread_m", 300.0)),
                daily_rate=float(h.get("rate", h.get("daily_rate", 20.0))),
            )
            for h in doc.get("hotspots", [])
        ]
        kwargs = {
            key: doc[key]
            for key in (
                "lat_min",
                "lat_max",
                "lng_min",
                "lng_max",
                "target_kind",
                "target_name",
                "n_users",
                "days",
                "start_ts",
                "seed",
                "conversion_rate",
                "seasonality_amplitude",
                "independent_visits",
                "base_visit_rate",
                "noise_query_rate",
                "hour_weights",
                "weekday_weights",
                "tz_offset_hours",
            )
            if key in doc
        }
        cfg = CityConfig(**kwargs)
        if hotspots:
            cfg.hotspots = hotspots
        if "poi_counts" in doc:
            cfg.poi_counts = {str(k): int(v) for k, v in doc["poi_counts"].items()}
        if "brand_shares" in doc:
            cfg.brand_shares = {
                str(cat): {str(b): float(s) for b, s in shares.items()}
                for cat, shares in doc["brand_shares"].items()
            }
        if "aliases" in doc:
            cfg.aliases = {str(k): str(v) for k, v in doc["aliases"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad city config {path}: {exc}") from exc
    if seed_override is not None:
        cfg.seed = int(seed_override)
    return cfg
