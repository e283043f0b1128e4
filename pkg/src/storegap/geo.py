"""Geographic primitives and a uniform-grid index for disc and k-NN queries."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

EARTH_RADIUS_M = 6_371_000.0

# Meters per degree of latitude on the sphere (pi * R / 180).
_M_PER_DEG_LAT = math.pi * EARTH_RADIUS_M / 180.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lng: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lat", float(self.lat))
        object.__setattr__(self, "lng", float(self.lng))
        if not (math.isfinite(self.lat) and math.isfinite(self.lng)):
            raise ValueError(f"non-finite coordinates ({self.lat}, {self.lng})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lng <= 180.0:
            raise ValueError(f"longitude {self.lng} outside [-180, 180]")


@dataclass(frozen=True)
class Disc:
    center: GeoPoint
    radius_m: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius_m) and self.radius_m > 0):
            raise ValueError(f"radius_m must be finite and > 0, got {self.radius_m}")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a spherical Earth."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    d_phi = math.radians(b.lat - a.lat)
    d_lambda = math.radians(b.lng - a.lng)
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lambda / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


class LocalProjection:
    """Equirectangular projection anchored at a reference point.

    Linear in (lat, lng), so lat/lng rectangles map exactly to projected
    rectangles. Valid at city scale; all exact distance checks still use
    the haversine metric.
    """

    def __init__(self, anchor: GeoPoint):
        self.anchor = anchor
        self._m_per_deg_lng = _M_PER_DEG_LAT * math.cos(math.radians(anchor.lat))

    def to_xy(self, p: GeoPoint) -> tuple[float, float]:
        x = (p.lng - self.anchor.lng) * self._m_per_deg_lng
        y = (p.lat - self.anchor.lat) * _M_PER_DEG_LAT
        return x, y

    def to_point(self, x: float, y: float) -> GeoPoint:
        lng = self.anchor.lng + (x / self._m_per_deg_lng if self._m_per_deg_lng != 0 else 0.0)
        lat = self.anchor.lat + y / _M_PER_DEG_LAT
        return GeoPoint(lat, lng)


def _disc_latlng_bounds(center: GeoPoint, radius_m: float) -> tuple[float, float, float, float]:
    """Conservative (lat_min, lat_max, lng_min, lng_max) bounds of a disc."""
    d_lat = radius_m / _M_PER_DEG_LAT
    lat_lo = center.lat - d_lat
    lat_hi = center.lat + d_lat
    # Longitude extent grows toward the poles; bound it by the most extreme
    # latitude the disc can reach.
    max_abs_lat = min(90.0, max(abs(lat_lo), abs(lat_hi)))
    cos_lat = math.cos(math.radians(max_abs_lat))
    ang = radius_m / EARTH_RADIUS_M
    if cos_lat <= 1e-9 or math.sin(ang) >= cos_lat:
        d_lng = 180.0
    else:
        d_lng = math.degrees(math.asin(math.sin(ang) / cos_lat)) * 1.001
    return lat_lo, lat_hi, center.lng - d_lng, center.lng + d_lng


@dataclass
class SpatialIndex:
    """Uniform-grid index over a local equirectangular projection.

    Immutable after build; candidate cells are found via the grid and every
    candidate is verified with the exact haversine distance, so query results
    are identical to a brute-force linear scan.
    """

    cell_size_m: float
    projection: LocalProjection
    cells: dict[tuple[int, int], list[tuple[object, GeoPoint]]] = field(default_factory=dict)
    n_items: int = 0

    @classmethod
    def build(cls, items: list[tuple[object, GeoPoint]], cell_size_m: float = 1000.0) -> SpatialIndex:
        if not (math.isfinite(cell_size_m) and cell_size_m > 0):
            raise ValueError(f"cell_size_m must be > 0, got {cell_size_m}")
        if items:
            lat0 = (min(p.lat for _, p in items) + max(p.lat for _, p in items)) / 2.0
            lng0 = (min(p.lng for _, p in items) + max(p.lng for _, p in items)) / 2.0
            anchor = GeoPoint(lat0, lng0)
        else:
            anchor = GeoPoint(0.0, 0.0)
        index = cls(cell_size_m=cell_size_m, projection=LocalProjection(anchor))
        for item_id, point in items:
            if not isinstance(point, GeoPoint):
                point = GeoPoint(point[0], point[1])  # type: ignore[index]
            key = index._cell_key(point)
            index.cells.setdefault(key, []).append((item_id, point))
            index.n_items += 1
        return index

    def _cell_key(self, p: GeoPoint) -> tuple[int, int]:
        x, y = self.projection.to_xy(p)
        return (math.floor(x / self.cell_size_m), math.floor(y / self.cell_size_m))

    def _candidates(self, center: GeoPoint, radius_m: float) -> list[tuple[object, GeoPoint]]:
        lat_lo, lat_hi, lng_lo, lng_hi = _disc_latlng_bounds(center, radius_m)
        x_lo, y_lo = self.projection.to_xy(GeoPoint(max(lat_lo, -90.0), max(lng_lo, -180.0)))
        x_hi, y_hi = self.projection.to_xy(GeoPoint(min(lat_hi, 90.0), min(lng_hi, 180.0)))
        ix_lo = math.floor(x_lo / self.cell_size_m)
        ix_hi = math.floor(x_hi / self.cell_size_m)
        iy_lo = math.floor(y_lo / self.cell_size_m)
        iy_hi = math.floor(y_hi / self.cell_size_m)
        # Degenerate discs spanning most of the grid: scan everything.
        if (ix_hi - ix_lo + 1) * (iy_hi - iy_lo + 1) > 4 * max(1, len(self.cells)):
            out = []
            for bucket in self.cells.values():
                out.extend(bucket)
            return out
        out = []
        for ix in range(ix_lo, ix_hi + 1):
            for iy in range(iy_lo, iy_hi + 1):
                bucket = self.cells.get((ix, iy))
                if bucket:
                    out.extend(bucket)
        return out

    def query_disc(self, disc: Disc) -> list[object]:
        """Ids of items within the closed disc, ascending by id."""
        hits = [
            item_id
            for item_id, point in self._candidates(disc.center, disc.radius_m)
            if haversine_m(disc.center, point) <= disc.radius_m
        ]
        hits.sort()
        return hits

    def k_nearest(self, origin: GeoPoint, k: int, max_radius_m: float) -> list[tuple[object, float]]:
        """Up to k (id, distance) pairs within max_radius_m, nearest first.

        Ties on distance break by ascending id. Returns fewer than k items
        when the disc is sparse.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        scored = [
            (haversine_m(origin, point), item_id)
            for item_id, point in self._candidates(origin, max_radius_m)
        ]
        scored = [(d, i) for d, i in scored if d <= max_radius_m]
        scored.sort(key=lambda t: (t[0], t[1]))
        return [(item_id, d) for d, item_id in scored[:k]]

    def nearest_distance_m(self, origin: GeoPoint, max_radius_m: float = float("inf")) -> float | None:
        """Distance to the nearest item, or None when the index is empty.

        Unbounded searches fall back to a scan of all items.
        """
        if self.n_items == 0:
            return None
        if math.isinf(max_radius_m):
            best = None
            for bucket in self.cells.values():
                for _, point in bucket:
                    d = haversine_m(origin, point)
                    if best is None or d < best:
                        best = d
            return best
        result = self.k_nearest(origin, 1, max_radius_m)
        return result[0][1] if result else None

    def count_within(self, origin: GeoPoint, radius_m: float) -> int:
        return sum(
            1
            for _, point in self._candidates(origin, radius_m)
            if haversine_m(origin, point) <= radius_m
        )


def build_index(items: list[tuple[object, GeoPoint]], cell_size_m: float = 1000.0) -> SpatialIndex:
    return SpatialIndex.build(items, cell_size_m)
