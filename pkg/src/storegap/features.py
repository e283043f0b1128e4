"""Seven location features over the 1 km disc around a candidate point.

All features are pure functions of an immutable FeatureContext, so they can
be evaluated for many locations concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geo import Disc, GeoPoint, SpatialIndex, haversine_m
from .ingest import Poi, VisitTable

DEFAULT_RADIUS_M = 1000.0
ESTATE_RADIUS_M = 2000.0
ESTATE_K = 5

FEATURE_NAMES = (
    "dist_center_m",
    "traffic_stations",
    "poi_density",
    "area_cat_popularity",
    "competition",
    "area_popularity",
    "estate_price",
)


@dataclass(frozen=True)
class FeatureVector:
    dist_center_m: float
    traffic_stations: int
    poi_density: int
    area_cat_popularity: float
    competition: float
    area_popularity: float
    estate_price: float
    estate_price_missing: bool = False

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.dist_center_m,
                float(self.traffic_stations),
                float(self.poi_density),
                self.area_cat_popularity,
                self.competition,
                self.area_popularity,
                self.estate_price,
            ]
        )

    def as_dict(self) -> dict[str, float]:
        values = self.as_array()
        return {name: float(v) for name, v in zip(FEATURE_NAMES, values)}


@dataclass
class FeatureContext:
    pois: list[Poi]
    by_id: dict[str, Poi]
    poi_index: SpatialIndex
    estate_index: SpatialIndex
    transport_index: SpatialIndex
    visits: VisitTable
    city_center: GeoPoint
    target_category: str
    radius_m: float = DEFAULT_RADIUS_M
    transport_categories: frozenset[str] = frozenset({"transport"})
    estate_categories: frozenset[str] = frozenset({"real-estate"})
    _cat_popularity_cache: dict[str, float] | None = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        pois: list[Poi],
        visits: VisitTable,
        city_center: GeoPoint,
        target_category: str,
        radius_m: float = DEFAULT_RADIUS_M,
        transport_categories: frozenset[str] = frozenset({"transport"}),
        estate_categories: frozenset[str] = frozenset({"real-estate"}),
    ) -> FeatureContext:
        if radius_m <= 0:
            raise ValueError("radius_m must be > 0")
        estate = [
            (p.id, p.location)
            for p in pois
            if p.category_l1 in estate_categories and p.unit_price is not None
        ]
        transport = [
            (p.id, p.location)
            for p in pois
            if p.category_l1 in transport_categories or p.category_l2 in transport_categories
        ]
        return cls(
            pois=list(pois),
            by_id={p.id: p for p in pois},
            poi_index=SpatialIndex.build([(p.id, p.location) for p in pois], cell_size_m=radius_m),
            estate_index=SpatialIndex.build(estate, cell_size_m=ESTATE_RADIUS_M),
            transport_index=SpatialIndex.build(transport, cell_size_m=radius_m),
            visits=visits,
            city_center=city_center,
            target_category=target_category,
            radius_m=radius_m,
            transport_categories=transport_categories,
            estate_categories=estate_categories,
        )


def f_dist_center(l: GeoPoint, ctx: FeatureContext) -> float:
    return haversine_m(l, ctx.city_center)


def f_traffic(l: GeoPoint, ctx: FeatureContext) -> int:
    """Transportation stations within the disc."""
    return len(ctx.transport_index.query_disc(Disc(l, ctx.radius_m)))


def f_density(l: GeoPoint, ctx: FeatureContext) -> int:
    """All POIs within the disc."""
    return len(ctx.poi_index.query_disc(Disc(l, ctx.radius_m)))


def area_category(l: GeoPoint, ctx: FeatureContext) -> str:
    """Modal top-level category inside the disc; lexicographic tie-break;
    "none" for an empty disc."""
    ids = ctx.poi_index.query_disc(Disc(l, ctx.radius_m))
    if not ids:
        return "none"
    counts: dict[str, int] = {}
    for pid in ids:
        cat = ctx.by_id[pid].category_l1
        counts[cat] = counts.get(cat, 0) + 1
    return min(counts, key=lambda c: (-counts[c], c))


def _cat_popularity_table(ctx: FeatureContext) -> dict[str, float]:
    """Mean visit count of target-category POIs grouped by their area category."""
    if ctx._cat_popularity_cache is None:
        groups: dict[str, list[int]] = {}
        for p in ctx.pois:
            if p.category_l1 != ctx.target_category:
                continue
            ac = area_category(p.location, ctx)
            groups.setdefault(ac, []).append(ctx.visits.count(p.id))
        ctx._cat_popularity_cache = {
            ac: (sum(ws) / len(ws)) if ws else 0.0 for ac, ws in groups.items()
        }
    return ctx._cat_popularity_cache


def f_area_cat_popularity(l: GeoPoint, ctx: FeatureContext) -> float:
    """How well target-category stores do city-wide in areas of this kind.

    Mean visits over target-category POIs whose own area category equals this
    location's; 0.0 when no such POIs exist.
    """
    return _cat_popularity_table(ctx).get(area_category(l, ctx), 0.0)


def f_competition(l: GeoPoint, ctx: FeatureContext) -> float:
    """Share of disc POIs that already belong to the target category."""
    ids = ctx.poi_index.query_disc(Disc(l, ctx.radius_m))
    if not ids:
        return 0.0
    n_c = sum(1 for pid in ids if ctx.by_id[pid].category_l1 == ctx.target_category)
    return n_c / len(ids)


def f_area_popularity(l: GeoPoint, ctx: FeatureContext, exclude_poi: str | None = None) -> float:
    """Total visits inside the disc, optionally without one POI's own visits."""
    ids = ctx.poi_index.query_disc(Disc(l, ctx.radius_m))
    total = sum(ctx.visits.count(pid) for pid in ids)
    if exclude_poi is not None and exclude_poi in ids:
        total -= ctx.visits.count(exclude_poi)
    return float(total)


def f_estate_price(l: GeoPoint, ctx: FeatureContext) -> tuple[float, bool]:
    """Mean unit price of the up-to-5 nearest priced estates within 2 km.

    Returns (price, missing): price 0.0 with missing=True when none are in
    range.
    """
    nearest = ctx.estate_index.k_nearest(l, ESTATE_K, ESTATE_RADIUS_M)
    if not nearest:
        return 0.0, True
    prices = [ctx.by_id[pid].unit_price for pid, _ in nearest]
    return float(sum(prices) / len(prices)), False


def feature_vector(l: GeoPoint, ctx: FeatureContext, exclude_poi: str | None = None) -> FeatureVector:
    price, missing = f_estate_price(l, ctx)
    return FeatureVector(
        dist_center_m=f_dist_center(l, ctx),
        traffic_stations=f_traffic(l, ctx),
        poi_density=f_density(l, ctx),
        area_cat_popularity=f_area_cat_popularity(l, ctx),
        competition=f_competition(l, ctx),
        area_popularity=f_area_popularity(l, ctx, exclude_poi),
        estate_price=price,
        estate_price_missing=missing,
    )


def features_csv(rows: list[tuple[str, FeatureVector, float | None]]) -> str:
    """Render feature rows: id, the seven features, then an optional target."""
    lines = ["id," + ",".join(FEATURE_NAMES) + ",target"]
    for row_id, fv, target in rows:
        cells = [row_id]
        cells.extend(repr(float(v)) for v in fv.as_array())
        cells.append("" if target is None else repr(float(target)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
