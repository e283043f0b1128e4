"""Demand mining: extract demand points, exclude supplied ones, cluster the gap.

The residual demand-supply gap is clustered with flat-kernel MeanShift; the
cluster modes are the candidate store locations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .geo import Disc, GeoPoint, LocalProjection, SpatialIndex, haversine_m
from .ingest import (
    DEFAULT_TZ_OFFSET_HOURS,
    Poi,
    QueryRecord,
    WifiRecord,
    calendar_day,
    local_hour,
    local_weekday,
    normalize_keyword,
)

MEANSHIFT_TOL_M = 1.0
MEANSHIFT_MAX_ITER = 300

# Brands with fewer route queries than this fall back to the category-level
# distance CDF when deriving the exclusion threshold.
MIN_ROUTE_QUERIES_FOR_BRAND_CDF = 50


@dataclass(frozen=True)
class Target:
    """What the demand is for: a chain brand or a whole category."""

    kind: str  # "brand" | "category"
    name: str

    def __post_init__(self) -> None:
        if self.kind not in ("brand", "category"):
            raise ValueError(f"target kind must be 'brand' or 'category', got {self.kind!r}")
        if not self.name:
            raise ValueError("target name must be non-empty")


@dataclass(frozen=True)
class DemandPoint:
    location: GeoPoint
    timestamp: int
    kind: str  # "specific" | "general"
    label: str  # brand for specific, category for general

    def __post_init__(self) -> None:
        if self.kind not in ("specific", "general"):
            raise ValueError(f"demand kind must be 'specific' or 'general', got {self.kind!r}")
        if not self.label:
            raise ValueError("demand label must be non-empty")


@dataclass(frozen=True)
class ExclusionParams:
    sigma_m: float = 300.0
    epsilon: float = 0.5
    alpha: float = 0.7
    percentile: float = 0.8
    supply_count_radius_m: float = 1000.0
    mode: str = "probabilistic"  # "probabilistic" | "deterministic"
    theta: float = 0.5  # retention threshold for deterministic mode

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.percentile < 1.0:
            raise ValueError(f"percentile must be in (0, 1), got {self.percentile}")
        if self.sigma_m <= 0:
            raise ValueError("sigma_m must be > 0")
        if self.supply_count_radius_m <= 0:
            raise ValueError("supply_count_radius_m must be > 0")
        if self.mode not in ("probabilistic", "deterministic"):
            raise ValueError(f"mode must be 'probabilistic' or 'deterministic', got {self.mode!r}")


@dataclass(frozen=True)
class DemandCenter:
    location: GeoPoint
    member_count: int
    weight: float


@dataclass
class TemporalProfile:
    hour_hist: list[int] = field(default_factory=lambda: [0] * 24)
    weekday_hist: list[int] = field(default_factory=lambda: [0] * 7)
    sd_distance_cdf: list[tuple[float, float]] = field(default_factory=list)


# --- demand point extraction -------------------------------------------------


def extract_demand(
    queries: list[QueryRecord],
    pois: list[Poi],
    target: Target,
    alias_table: dict[str, str] | None = None,
) -> list[DemandPoint]:
    """Pull the demand points for a brand (route queries) or category (nearby).

    Specific demand keeps route queries whose resolved target POI carries the
    brand, or whose keyword normalizes to it. General demand keeps nearby
    queries whose keyword maps to the category through the alias table (the
    category's own name always maps to itself). Input order is preserved.
    """
    points: list[DemandPoint] = []
    if target.kind == "brand":
        want = normalize_keyword(target.name)
        brand_by_poi = {p.id: normalize_keyword(p.brand) for p in pois if p.brand}
        for q in queries:
            if q.query_kind != "route":
                continue
            if brand_by_poi.get(q.target_poi_id) == want or normalize_keyword(q.keyword) == want:
                points.append(DemandPoint(q.origin, q.timestamp, "specific", target.name))
    else:
        aliases = {normalize_keyword(k): v for k, v in (alias_table or {}).items()}
        aliases.setdefault(normalize_keyword(target.name), target.name)
        for q in queries:
            if q.query_kind != "nearby":
                continue
            if aliases.get(normalize_keyword(q.keyword)) == target.name:
                points.append(DemandPoint(q.origin, q.timestamp, "general", target.name))
    if not points:
        warnings.warn(f"no demand points matched target {target.kind}:{target.name}", stacklevel=2)
    return points


def route_od_pairs(
    queries: list[QueryRecord], pois: list[Poi], category: str | None = None, brand: str | None = None
) -> list[tuple[GeoPoint, GeoPoint]]:
    """(origin, destination) pairs of route queries with a resolvable target.

    Optionally restricted to destinations of one category_l1 or one brand.
    """
    by_id = {p.id: p for p in pois}
    want_brand = normalize_keyword(brand) if brand else None
    pairs = []
    for q in queries:
        if q.query_kind != "route" or q.target_poi_id is None:
            continue
        poi = by_id.get(q.target_poi_id)
        if poi is None:
            continue
        if category is not None and poi.category_l1 != category:
            continue
        if want_brand is not None and (not poi.brand or normalize_keyword(poi.brand) != want_brand):
            continue
        pairs.append((q.origin, poi.location))
    return pairs


def temporal_profile(
    points: list[DemandPoint],
    od_pairs: list[tuple[GeoPoint, GeoPoint]] = (),
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS,
) -> TemporalProfile:
    """Hour/weekday activity histograms plus the source-destination distance CDF."""
    profile = TemporalProfile()
    for p in points:
        profile.hour_hist[local_hour(p.timestamp, tz_offset_hours)] += 1
        profile.weekday_hist[local_weekday(p.timestamp, tz_offset_hours)] += 1
    if od_pairs:
        dists = sorted(haversine_m(o, d) for o, d in od_pairs)
        n = len(dists)
        profile.sd_distance_cdf = [(d, (i + 1) / n) for i, d in enumerate(dists)]
    return profile


def effective_distance(profile: TemporalProfile, percentile: float) -> float:
    """Smallest recorded distance whose cumulative fraction reaches the percentile."""
    if not profile.sd_distance_cdf:
        raise ValueError("empty source-destination distance CDF; supply a fallback radius")
    for dist, frac in profile.sd_distance_cdf:
        if frac >= percentile:
            return dist
    return profile.sd_distance_cdf[-1][0]


# --- exclusion ---------------------------------------------------------------


def _store_index(stores: list[Poi]) -> SpatialIndex:
    return SpatialIndex.build([(p.id, p.location) for p in stores])


def exclude_specific(
    points: list[DemandPoint], stores: list[Poi], threshold_m: float
) -> list[DemandPoint]:
    """Keep points farther than threshold_m from every store (closed boundary
    counts as supplied). With no stores nothing is excluded."""
    if threshold_m <= 0:
        raise ValueError("threshold_m must be > 0")
    if not stores:
        return list(points)
    index = _store_index(stores)
    out = []
    for p in points:
        d = index.nearest_distance_m(p.location, max_radius_m=threshold_m)
        if d is None:
            out.append(p)
    return out


def retention_components(
    d_nearest_m: float, n_nearby: int, params: ExclusionParams
) -> tuple[float, float, float]:
    """(distance score, supply score, retention score) for a demand point.

    distance score = 1 - exp(-d^2 / sigma^2): far from the nearest store means
    the demand is unlikely to be satisfied. supply score = exp(-epsilon * N):
    many stores nearby means it likely is. Retention blends the two with
    weight alpha.
    """
    s_d = 1.0 - math.exp(-(d_nearest_m * d_nearest_m) / (params.sigma_m * params.sigma_m))
    s_s = math.exp(-params.epsilon * n_nearby)
    s_r = params.alpha * s_d + (1.0 - params.alpha) * s_s
    return s_d, s_s, s_r


def retention_score(
    point: DemandPoint | GeoPoint,
    stores: list[Poi] | SpatialIndex,
    params: ExclusionParams,
) -> float:
    """Retention score of one demand point against the existing stores.

    By convention the score is 1.0 when the data set contains no stores at
    all (nothing supplies the demand).
    """
    location = point.location if isinstance(point, DemandPoint) else point
    index = stores if isinstance(stores, SpatialIndex) else _store_index(stores)
    if index.n_items == 0:
        return 1.0
    d = index.nearest_distance_m(location)
    n = index.count_within(location, params.supply_count_radius_m)
    return retention_components(d, n, params)[2]


def exclude_general(
    points: list[DemandPoint],
    stores: list[Poi],
    params: ExclusionParams,
    rng_seed: int = 0,
) -> list[DemandPoint]:
    """Probabilistically retain each point with probability equal to its
    retention score; or deterministically with score >= theta.

    Each point's random draw derives from (seed, point index), so the outcome
    does not depend on evaluation order.
    """
    index = _store_index(stores)
    survivors = []
    for i, p in enumerate(points):
        s_r = retention_score(p, index, params)
        if params.mode == "deterministic":
            keep = s_r >= params.theta
        else:
            u = np.random.default_rng([rng_seed, i]).random()
            keep = u < s_r
        if keep:
            survivors.append(p)
    return survivors


# --- clustering --------------------------------------------------------------


def mean_shift(
    points: list[GeoPoint],
    bandwidth_m: float,
    weights: list[float] | None = None,
    tol_m: float = MEANSHIFT_TOL_M,
    max_iter: int = MEANSHIFT_MAX_ITER,
) -> list[DemandCenter]:
    """Flat-kernel MeanShift over geographic points.

    Every input point seeds an ascent: the seed repeatedly moves to the
    (weighted) mean of the points within bandwidth_m until the shift drops
    below tol_m. Converged seeds closer than bandwidth_m / 2 merge, the mode
    backed by more points keeping its location. Members are then assigned to
    their nearest surviving mode. Centers come back sorted by descending
    member_count, ties by ascending (lat, lng).
    """
    if not points:
        raise ValueError("mean_shift requires at least one point")
    if bandwidth_m <= 0:
        raise ValueError("bandwidth_m must be > 0")
    n = len(points)
    if weights is None:
        w = np.ones(n)
    else:
        if len(weights) != n:
            raise ValueError("weights length must match points")
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if w.sum() <= 0:
            w = np.ones(n)

    lat0 = (min(p.lat for p in points) + max(p.lat for p in points)) / 2.0
    lng0 = (min(p.lng for p in points) + max(p.lng for p in points)) / 2.0
    proj = LocalProjection(GeoPoint(lat0, lng0))
    xy = np.array([proj.to_xy(p) for p in points])
    lats = np.array([p.lat for p in points])
    lngs = np.array([p.lng for p in points])

    def window_mask(pos: GeoPoint) -> np.ndarray:
        # Exact haversine membership, vectorized.
        phi1 = math.radians(pos.lat)
        phi2 = np.radians(lats)
        d_phi = np.radians(lats - pos.lat)
        d_lmb = np.radians(lngs - pos.lng)
        h = np.sin(d_phi / 2.0) ** 2 + math.cos(phi1) * np.cos(phi2) * np.sin(d_lmb / 2.0) ** 2
        d = 2.0 * 6_371_000.0 * np.arcsin(np.minimum(1.0, np.sqrt(h)))
        return d <= bandwidth_m

    modes: list[GeoPoint] = []
    for i in range(n):
        pos = points[i]
        for _ in range(max_iter):
            mask = window_mask(pos)
            if not mask.any():
                break  # cannot happen for seeds starting on a point; guard anyway
            ww = w[mask]
            if ww.sum() <= 0:
                ww = np.ones(int(mask.sum()))
            mean_xy = np.average(xy[mask], axis=0, weights=ww)
            new_pos = proj.to_point(float(mean_xy[0]), float(mean_xy[1]))
            shift = haversine_m(pos, new_pos)
            pos = new_pos
            if shift < tol_m:
                break
        modes.append(pos)

    # Support of each mode before merging: points inside its window.
    support = [int(window_mask(m).sum()) for m in modes]
    order = sorted(range(n), key=lambda i: (-support[i], modes[i].lat, modes[i].lng))
    kept: list[GeoPoint] = []
    for i in order:
        if all(haversine_m(modes[i], c) > bandwidth_m / 2.0 for c in kept):
            kept.append(modes[i])

    # Assign every point to its nearest surviving mode.
    member_count = [0] * len(kept)
    weight_sum = [0.0] * len(kept)
    for j, p in enumerate(points):
        dists = [haversine_m(p, c) for c in kept]
        best = min(range(len(kept)), key=lambda ci: (dists[ci], ci))
        member_count[best] += 1
        weight_sum[best] += float(w[j])

    centers = [
        DemandCenter(location=c, member_count=member_count[ci], weight=weight_sum[ci])
        for ci, c in enumerate(kept)
        if member_count[ci] > 0
    ]
    centers.sort(key=lambda c: (-c.member_count, c.location.lat, c.location.lng))
    return centers


# --- end-to-end demand center pipeline ---------------------------------------


def find_demand_centers(
    queries: list[QueryRecord],
    pois: list[Poi],
    target: Target,
    params: ExclusionParams,
    alias_table: dict[str, str] | None = None,
    fallback_threshold_m: float = 1000.0,
    rng_seed: int = 0,
    weight_by_retention: bool = False,
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS,
) -> list[DemandCenter]:
    """Identify demand points, exclude supplied ones, cluster the rest.

    The exclusion threshold is the percentile of the source-destination
    distance CDF (brand-level for specific demand when enough route queries
    exist, category-level otherwise), and doubles as the MeanShift bandwidth.
    """
    points = extract_demand(queries, pois, target, alias_table)
    if not points:
        return []

    if target.kind == "brand":
        stores = [p for p in pois if p.brand and normalize_keyword(p.brand) == normalize_keyword(target.name)]
        pairs = route_od_pairs(queries, pois, brand=target.name)
        if len(pairs) < MIN_ROUTE_QUERIES_FOR_BRAND_CDF:
            category = _brand_category(pois, target.name)
            if category is not None:
                cat_pairs = route_od_pairs(queries, pois, category=category)
                if cat_pairs:
                    pairs = cat_pairs
    else:
        stores = [p for p in pois if p.category_l1 == target.name]
        pairs = route_od_pairs(queries, pois, category=target.name)

    profile = temporal_profile(points, pairs, tz_offset_hours)
    try:
        threshold_m = effective_distance(profile, params.percentile)
    except ValueError:
        threshold_m = fallback_threshold_m
    threshold_m = max(threshold_m, 1.0)

    if target.kind == "brand":
        survivors = exclude_specific(points, stores, threshold_m)
        weights = None
    else:
        survivors = exclude_general(points, stores, params, rng_seed)
        weights = None
        if weight_by_retention:
            index = _store_index(stores)
            weights = [retention_score(p, index, params) for p in survivors]
    if not survivors:
        return []
    return mean_shift([p.location for p in survivors], bandwidth_m=threshold_m, weights=weights)


def _brand_category(pois: list[Poi], brand: str) -> str | None:
    want = normalize_keyword(brand)
    counts: dict[str, int] = {}
    for p in pois:
        if p.brand and normalize_keyword(p.brand) == want:
            counts[p.category_l1] = counts.get(p.category_l1, 0) + 1
    if not counts:
        return None
    return max(sorted(counts), key=lambda c: counts[c])


# --- query-visit correlation -------------------------------------------------


def query_visit_correlation(
    queries: list[QueryRecord],
    wifi: list[WifiRecord],
    pois: list[Poi],
    window_days: float = 1.5,
    match_radius_m: float = 1000.0,
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS,
) -> tuple[list[float], list[float], float | None]:
    """Daily query volume vs. daily attributed-visit volume, plus their R^2.

    A query counts as visited when the same user produces a WiFi record at a
    POI within match_radius_m of the queried destination within window_days
    after the query. Series are normalized by their maxima. R^2 is the
    squared Pearson correlation; None when fewer than 2 days of data exist.
    """
    by_id = {p.id: p for p in pois}
    poi_index = SpatialIndex.build([(p.id, p.location) for p in pois])
    wifi_by_user: dict[str, list[WifiRecord]] = {}
    for rec in wifi:
        wifi_by_user.setdefault(rec.user_id, []).append(rec)
    for recs in wifi_by_user.values():
        recs.sort(key=lambda r: r.timestamp)

    window_s = int(window_days * 86_400)
    day_queries: dict[int, int] = {}
    day_visits: dict[int, int] = {}
    near_cache: dict[str, set] = {}
    for q in queries:
        if q.target_poi_id is None or q.target_poi_id not in by_id:
            continue
        day = calendar_day(q.timestamp, tz_offset_hours)
        day_queries[day] = day_queries.get(day, 0) + 1
        near_dest = near_cache.get(q.target_poi_id)
        if near_dest is None:
            dest = by_id[q.target_poi_id].location
            near_dest = set(poi_index.query_disc(Disc(dest, match_radius_m)))
            near_cache[q.target_poi_id] = near_dest
        visited = False
        for rec in wifi_by_user.get(q.user_id, ()):
            if rec.timestamp <= q.timestamp:
                continue
            if rec.timestamp > q.timestamp + window_s:
                break
            if rec.poi_id in near_dest:
                visited = True
                break
        if visited:
            day_visits[day] = day_visits.get(day, 0) + 1

    if not day_queries:
        return [], [], None
    days = sorted(day_queries)
    q_series = [float(day_queries[d]) for d in days]
    v_series = [float(day_visits.get(d, 0)) for d in days]
    q_max = max(q_series) or 1.0
    v_max = max(v_series) or 1.0
    q_norm = [v / q_max for v in q_series]
    v_norm = [v / v_max for v in v_series]
    if len(days) < 2:
        return q_norm, v_norm, None
    qa = np.asarray(q_norm)
    va = np.asarray(v_norm)
    if qa.std() == 0 or va.std() == 0:
        return q_norm, v_norm, 0.0
    r = float(np.corrcoef(qa, va)[0, 1])
    return q_norm, v_norm, r * r


def demand_params_with(params: ExclusionParams, **overrides) -> ExclusionParams:
    return replace(params, **overrides)


def bucket_points(
    points: list[DemandPoint], cell_m: float, anchor: GeoPoint
) -> list[tuple[float, float, int]]:
    """Bucket demand points into a square grid of cell_m meters.

    Returns (cell-center lat, cell-center lng, count) sorted by (lat, lng);
    counts sum to the number of input points.
    """
    if cell_m <= 0:
        raise ValueError("cell_m must be > 0")
    proj = LocalProjection(anchor)
    counts: dict[tuple[int, int], int] = {}
    for p in points:
        x, y = proj.to_xy(p.location)
        key = (math.floor(x / cell_m), math.floor(y / cell_m))
        counts[key] = counts.get(key, 0) + 1
    cells = []
    for (ix, iy), count in counts.items():
        c = proj.to_point((ix + 0.5) * cell_m, (iy + 0.5) * cell_m)
        cells.append((c.lat, c.lng, count))
    cells.sort(key=lambda t: (t[0], t[1]))
    return cells
