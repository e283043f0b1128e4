"""Synthetic city generator with planted ground truth.

Builds query/POI/WiFi data sets where demand hotspots emit spatially Gaussian
query origins and every target-category POI's expected visit count is a known
monotone function of its location features. The manifest records the hotspot
centers and the true customer-count ranking so downstream recovery and
ranking experiments have an oracle to compare against.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geo import GeoPoint, LocalProjection
from .ingest import Poi, QueryRecord, WifiRecord, integrate_visits

TRANSPORT_CATEGORY = "transport"
ESTATE_CATEGORY = "real-estate"

# Direction each feature pushes the planted visit rate
# (dist_center, traffic, density, area_cat_popularity, competition,
#  area_popularity, estate_price).
PLANT_WEIGHTS = (-0.5, 0.4, 0.3, 0.3, -0.4, 0.9, 0.3)
PLANT_BASE_RATE = 80.0
PLANT_SCORE_CLIP = 2.5
PLANT_SCORE_GAIN = 0.7


@dataclass(frozen=True)
class Hotspot:
    lat: float
    lng: float
    spread_m: float
    daily_rate: float


@dataclass
class CityConfig:
    lat_min: float = 39.80
    lat_max: float = 40.05
    lng_min: float = 116.25
    lng_max: float = 116.55
    poi_counts: dict[str, int] = field(
        default_factory=lambda: {
            "coffee-shop": 150,
            "restaurant": 300,
            "office": 250,
            "hotel": 120,
            "shopping": 180,
            TRANSPORT_CATEGORY: 200,
            ESTATE_CATEGORY: 120,
        }
    )
    brand_shares: dict[str, dict[str, float]] = field(
        default_factory=lambda: {"coffee-shop": {"StarBrew": 0.25, "KafeKo": 0.2}}
    )
    hotspots: list[Hotspot] = field(
        default_factory=lambda: [Hotspot(39.95, 116.32, 300.0, 40.0), Hotspot(39.87, 116.48, 300.0, 30.0)]
    )
    target_kind: str = "category"  # what the hotspot queries ask for
    target_name: str = "coffee-shop"
    aliases: dict[str, str] = field(default_factory=lambda: {"coffee": "coffee-shop", "latte": "coffee-shop"})
    n_users: int = 600
    days: int = 30
    start_ts: int = 1_420_070_400  # 2015-01-01 00:00 UTC
    seed: int = 0
    conversion_rate: float = 0.5
    seasonality_amplitude: float = 0.5
    independent_visits: bool = False
    base_visit_rate: float = 25.0
    noise_query_rate: float = 60.0
    hour_weights: list[float] | None = None  # default: lunch/dinner biased
    weekday_weights: list[float] | None = None
    tz_offset_hours: int = 8


@dataclass
class GroundTruthManifest:
    hotspots: list[dict]
    true_ranking: list[str]
    expected_counts: dict[str, float]
    seed: int
    config: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "hotspots": self.hotspots,
                "true_ranking": self.true_ranking,
                "expected_counts": self.expected_counts,
                "seed": self.seed,
                "config": self.config,
            },
            indent=2,
            sort_keys=True,
            ensure_ascii=True,
        )


DEFAULT_HOUR_WEIGHTS = [
    0.2, 0.1, 0.1, 0.1, 0.1, 0.3, 0.6, 1.0, 1.6, 1.8, 2.0, 2.8,
    4.0, 3.0, 2.0, 1.8, 2.0, 2.6, 3.6, 4.2, 3.0, 2.0, 1.0, 0.5,
]
DEFAULT_WEEKDAY_WEIGHTS = [1.0, 1.0, 1.0, 1.1, 1.4, 1.8, 1.6]


def _validate(cfg: CityConfig) -> None:
    if cfg.lat_min >= cfg.lat_max or cfg.lng_min >= cfg.lng_max:
        raise ValueError("empty bounding box")
    if cfg.days < 1 or cfg.n_users < 1:
        raise ValueError("days and n_users must be >= 1")
    if any(n < 0 for n in cfg.poi_counts.values()):
        raise ValueError("poi counts must be non-negative")
    if not 0.0 <= cfg.conversion_rate <= 1.0:
        raise ValueError("conversion_rate must be in [0, 1]")
    if cfg.target_kind not in ("brand", "category"):
        raise ValueError("target_kind must be 'brand' or 'category'")
    total_pois = sum(cfg.poi_counts.values())
    if total_pois == 0 and any(h.daily_rate > 0 for h in cfg.hotspots):
        raise ValueError("hotspots with nonzero rates require at least one POI")
    if cfg.target_kind == "brand":
        brands = cfg.brand_shares.get(_brand_home_category(cfg), {})
        n_cat = cfg.poi_counts.get(_brand_home_category(cfg), 0)
        if cfg.target_name not in brands or brands[cfg.target_name] * n_cat < 1:
            raise ValueError(
                f"brand target {cfg.target_name!r} needs at least one store; "
                "route queries must name an existing POI"
            )
    for hs in cfg.hotspots:
        if hs.daily_rate < 0 or hs.spread_m <= 0:
            raise ValueError("hotspot rates must be >= 0 and spreads > 0")


def _brand_home_category(cfg: CityConfig) -> str:
    for cat, shares in cfg.brand_shares.items():
        if cfg.target_name in shares:
            return cat
    return cfg.target_name


def _seasonality(cfg: CityConfig, day: int) -> float:
    a = cfg.seasonality_amplitude
    s = 1.0 + a * (0.6 * math.sin(2 * math.pi * day / 7.0) + 0.4 * math.sin(2 * math.pi * day / 30.0 + 1.0))
    return max(0.1, s)


def generate_city(cfg: CityConfig) -> tuple[list[QueryRecord], list[Poi], list[WifiRecord], GroundTruthManifest]:
    """Generate a deterministic synthetic city from a seeded config."""
    _validate(cfg)
    rng = np.random.default_rng(cfg.seed)
    center = GeoPoint((cfg.lat_min + cfg.lat_max) / 2.0, (cfg.lng_min + cfg.lng_max) / 2.0)
    proj = LocalProjection(center)
    hour_w = np.asarray(cfg.hour_weights if cfg.hour_weights is not None else DEFAULT_HOUR_WEIGHTS, dtype=float)
    hour_p = hour_w / hour_w.sum()
    wd_w = np.asarray(cfg.weekday_weights if cfg.weekday_weights is not None else DEFAULT_WEEKDAY_WEIGHTS, dtype=float)
    wd_p = wd_w / wd_w.max()

    pois = _generate_pois(cfg, rng, center)
    category_pois = [p for p in pois if p.category_l1 == _target_category(cfg)]

    # Background visits for everything outside the target category. Rates decay
    # away from the city center so the popularity features carry real signal.
    background_w: dict[str, int] = {}
    span_m = _bbox_span_m(cfg, proj)
    for p in pois:
        if p.category_l1 == _target_category(cfg):
            continue
        d = _dist_m(proj, p.location, center)
        rate = cfg.base_visit_rate * (0.3 + 2.0 * math.exp(-3.0 * d / span_m))
        background_w[p.id] = int(rng.poisson(rate))

    # Demand queries from hotspots, plus unrelated noise traffic.
    queries: list[QueryRecord] = []
    conversions: list[tuple[QueryRecord, Poi]] = []  # (query, destination poi)
    brand_stores = [p for p in category_pois if cfg.target_kind == "brand" and p.brand == cfg.target_name]
    category_keywords = sorted(k for k, v in cfg.aliases.items() if v == cfg.target_name) or [cfg.target_name]
    for day in range(cfg.days):
        day_start = cfg.start_ts + day * 86_400 - cfg.tz_offset_hours * 3600
        season = _seasonality(cfg, day) * wd_p[(day + 3) % 7]
        for hs in cfg.hotspots:
            n_q = int(rng.poisson(hs.daily_rate * season))
            hs_center = GeoPoint(hs.lat, hs.lng)
            cx, cy = proj.to_xy(hs_center)
            for _ in range(n_q):
                dx, dy = rng.normal(0.0, hs.spread_m, size=2)
                origin = proj.to_point(cx + dx, cy + dy)
                origin = _clamp(origin, cfg)
                ts = _draw_ts(rng, day_start, hour_p)
                user = f"u{int(rng.integers(cfg.n_users)):05d}"
                if cfg.target_kind == "brand":
                    dest = min(
                        brand_stores,
                        key=lambda s: (_dist_m(proj, origin, s.location), s.id),
                    )
                    q = QueryRecord(user, ts, origin, cfg.target_name, "route", dest.id)
                else:
                    kw = category_keywords[int(rng.integers(len(category_keywords)))]
                    q = QueryRecord(user, ts, origin, kw, "nearby", None)
                    dest = _nearest_poi(category_pois, proj, origin)
                queries.append(q)
                if dest is not None and not cfg.independent_visits and rng.random() < cfg.conversion_rate:
                    conversions.append((q, dest))
        # Unrelated background queries keep extraction honest.
        n_noise = int(rng.poisson(cfg.noise_query_rate))
        other = [p for p in pois if p.category_l1 != _target_category(cfg)]
        for _ in range(n_noise):
            origin = _uniform_point(rng, cfg)
            ts = _draw_ts(rng, day_start, hour_p)
            user = f"u{int(rng.integers(cfg.n_users)):05d}"
            if other and rng.random() < 0.5:
                dest = other[int(rng.integers(len(other)))]
                queries.append(QueryRecord(user, ts, origin, dest.name, "route", dest.id))
            else:
                queries.append(QueryRecord(user, ts, origin, "misc", "nearby", None))

    # Conversion visits land at the nearest non-target POI around the queried
    # destination so the target POIs' planted counts stay pure.
    wifi: list[WifiRecord] = []
    non_target = [p for p in pois if p.category_l1 != _target_category(cfg)]
    for q, dest in conversions:
        landing = _nearest_poi(non_target, proj, dest.location, within_m=1000.0) or dest
        delay = int(rng.uniform(600, 1.2 * 86_400))
        wifi.append(WifiRecord(q.user_id, q.timestamp + delay, landing.id))

    # Background wifi stream realizing the background visit counts. Half the
    # visitor pool overlaps the query users so attribution sees realistic
    # accidental matches even without conversions.
    for p in pois:
        count = background_w.get(p.id)
        if not count:
            continue
        pairs = _distinct_user_days(rng, cfg, count)
        for user_idx, day in pairs:
            ts = _draw_ts(rng, cfg.start_ts + day * 86_400 - cfg.tz_offset_hours * 3600, hour_p)
            wifi.append(WifiRecord(_visitor_id(user_idx), ts, p.id))

    # Plant target-category visit counts as a monotone function of the seven
    # location features computed against everything generated so far.
    visits_so_far = integrate_visits(wifi, pois, cfg.tz_offset_hours)
    from .features import FeatureContext, feature_vector  # deferred: avoids import cycle

    ctx = FeatureContext.build(
        pois=pois,
        visits=visits_so_far,
        city_center=center,
        target_category=_target_category(cfg),
    )
    mu: dict[str, float] = {}
    if category_pois:
        raw = np.array([feature_vector(p.location, ctx).as_array() for p in category_pois])
        med = np.median(raw, axis=0)
        spread = np.std(raw, axis=0)
        spread[spread == 0] = 1.0
        z = (raw - med) / spread
        scores = np.clip(z @ np.asarray(PLANT_WEIGHTS), -PLANT_SCORE_CLIP, PLANT_SCORE_CLIP)
        for p, s in zip(category_pois, scores):
            mu[p.id] = PLANT_BASE_RATE * math.exp(PLANT_SCORE_GAIN * float(s))
        for p in category_pois:
            planted = int(rng.poisson(mu[p.id]))
            pairs = _distinct_user_days(rng, cfg, planted)
            for user_idx, day in pairs:
                ts = _draw_ts(rng, cfg.start_ts + day * 86_400 - cfg.tz_offset_hours * 3600, hour_p)
                wifi.append(WifiRecord(_visitor_id(user_idx), ts, p.id))

    queries.sort(key=lambda q: (q.timestamp, q.user_id, q.keyword))
    wifi.sort(key=lambda w: (w.timestamp, w.user_id, w.poi_id))

    ranking = sorted(mu, key=lambda pid: (-mu[pid], pid))
    manifest = GroundTruthManifest(
        hotspots=[{"lat": h.lat, "lng": h.lng, "spread_m": h.spread_m, "rate": h.daily_rate} for h in cfg.hotspots],
        true_ranking=ranking,
        expected_counts={pid: mu[pid] for pid in ranking},
        seed=cfg.seed,
        config=_config_echo(cfg),
    )
    return queries, pois, wifi, manifest


def _config_echo(cfg: CityConfig) -> dict:
    echo = asdict(cfg)
    echo["hotspots"] = [asdict(h) for h in cfg.hotspots]
    return echo


def _target_category(cfg: CityConfig) -> str:
    if cfg.target_kind == "category":
        return cfg.target_name
    return _brand_home_category(cfg)


def _bbox_span_m(cfg: CityConfig, proj: LocalProjection) -> float:
    x0, y0 = proj.to_xy(GeoPoint(cfg.lat_min, cfg.lng_min))
    x1, y1 = proj.to_xy(GeoPoint(cfg.lat_max, cfg.lng_max))
    return math.hypot(x1 - x0, y1 - y0)


def _dist_m(proj: LocalProjection, a: GeoPoint, b: GeoPoint) -> float:
    ax, ay = proj.to_xy(a)
    bx, by = proj.to_xy(b)
    return math.hypot(ax - bx, ay - by)


def _clamp(p: GeoPoint, cfg: CityConfig) -> GeoPoint:
    return GeoPoint(
        min(max(p.lat, cfg.lat_min), cfg.lat_max),
        min(max(p.lng, cfg.lng_min), cfg.lng_max),
    )


def _uniform_point(rng: np.random.Generator, cfg: CityConfig) -> GeoPoint:
    return GeoPoint(
        float(rng.uniform(cfg.lat_min, cfg.lat_max)),
        float(rng.uniform(cfg.lng_min, cfg.lng_max)),
    )


def _draw_ts(rng: np.random.Generator, day_start: int, hour_p: np.ndarray) -> int:
    hour = int(rng.choice(24, p=hour_p))
    return day_start + hour * 3600 + int(rng.integers(3600))


def _nearest_poi(pois: list[Poi], proj: LocalProjection, origin: GeoPoint, within_m: float | None = None) -> Poi | None:
    best = None
    best_d = math.inf
    for p in pois:
        d = _dist_m(proj, origin, p.location)
        if d < best_d or (d == best_d and best is not None and p.id < best.id):
            best, best_d = p, d
    if best is None:
        return None
    if within_m is not None and best_d > within_m:
        return None
    return best


def _visitor_id(user_idx: int) -> str:
    return f"u{user_idx:05d}" if user_idx % 2 == 0 else f"v{user_idx:05d}"


def _distinct_user_days(rng: np.random.Generator, cfg: CityConfig, count: int) -> list[tuple[int, int]]:
    """Sample `count` distinct (visitor index, day) pairs."""
    capacity = cfg.n_users * cfg.days
    count = min(count, capacity)
    chosen: set[tuple[int, int]] = set()
    while len(chosen) < count:
        user_idx = int(rng.integers(cfg.n_users))
        day = int(rng.integers(cfg.days))
        chosen.add((user_idx, day))
    return sorted(chosen)


def _generate_pois(cfg: CityConfig, rng: np.random.Generator, center: GeoPoint) -> list[Poi]:
    proj = LocalProjection(center)
    span = _bbox_span_m(cfg, proj)
    pois: list[Poi] = []
    serial = 0
    for cat in sorted(cfg.poi_counts):
        n = cfg.poi_counts[cat]
        shares = cfg.brand_shares.get(cat, {})
        brand_list: list[str | None] = []
        for brand in sorted(shares):
            brand_list.extend([brand] * int(round(shares[brand] * n)))
        brand_list.extend([None] * (n - len(brand_list)))
        brand_order = list(rng.permutation(len(brand_list)))
        for i in range(n):
            serial += 1
            # Cluster more density toward the center, keep a uniform floor.
            if rng.random() < 0.6:
                cx, cy = proj.to_xy(center)
                dx, dy = rng.normal(0.0, span / 6.0, size=2)
                loc = _clamp(proj.to_point(cx + dx, cy + dy), cfg)
            else:
                loc = _uniform_point(rng, cfg)
            brand = brand_list[brand_order[i]] if brand_list else None
            price = None
            if cat == ESTATE_CATEGORY:
                d = _dist_m(proj, loc, center)
                price = round(80_000.0 * math.exp(-1.2 * d / span) * float(rng.uniform(0.85, 1.15)), 2)
            pois.append(
                Poi(
                    id=f"p{serial:05d}",
                    name=brand or f"{cat}-{serial}",
                    location=loc,
                    category_l1=cat,
                    category_l2=f"{cat}-generic",
                    brand=brand,
                    unit_price=price,
                )
            )
    return pois
