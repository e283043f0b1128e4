"""Query-visit correlation: attribution matching and the daily R^2."""

from __future__ import annotations

import pytest

from storegap import CityConfig, generate_city
from storegap.demand import query_visit_correlation
from storegap.geo import GeoPoint
from storegap.ingest import Poi, QueryRecord, WifiRecord
from storegap.synth import Hotspot

BASE_TS = 1_420_070_400
DAY = 86_400


def correlation_cfg(independent: bool, seed: int = 0) -> CityConfig:
    return CityConfig(
        seed=seed,
        days=90,
        n_users=400,
        target_kind="brand",
        target_name="StarBrew",
        brand_shares={"coffee-shop": {"StarBrew": 0.3}},
        poi_counts={
            "coffee-shop": 40,
            "restaurant": 80,
            "office": 60,
            "transport": 30,
            "real-estate": 30,
        },
        hotspots=[Hotspot(39.95, 116.32, 300.0, 60.0), Hotspot(39.87, 116.48, 300.0, 50.0)],
        conversion_rate=0.5,
        seasonality_amplitude=0.5,
        independent_visits=independent,
        base_visit_rate=8.0,
        noise_query_rate=30.0,
    )


class TestAttributionFixture:
    def test_every_query_converted_gives_r2_one(self):
        dest = Poi(id="p1", name="p1", location=GeoPoint(39.9, 116.4), category_l1="coffee-shop")
        queries = []
        wifi = []
        for day in range(3):
            for i in range(day + 1):  # 1, 2, 3 queries per day
                ts = BASE_TS + day * DAY + 3600 * i + 1
                queries.append(
                    QueryRecord(f"u{day}{i}", ts, GeoPoint(39.89, 116.39), "StarBrew", "route", "p1")
                )
                wifi.append(WifiRecord(f"u{day}{i}", ts + 1800, "p1"))
        q_norm, v_norm, r2 = query_visit_correlation(queries, wifi, [dest])
        assert q_norm == v_norm
        assert r2 == pytest.approx(1.0)

    def test_window_excludes_late_visits(self):
        dest = Poi(id="p1", name="p1", location=GeoPoint(39.9, 116.4), category_l1="coffee-shop")
        q = QueryRecord("u1", BASE_TS, GeoPoint(39.89, 116.39), "StarBrew", "route", "p1")
        late = WifiRecord("u1", BASE_TS + 2 * DAY, "p1")  # beyond 1.5 days
        _, v_norm, _ = query_visit_correlation([q], [late], [dest])
        assert v_norm == [0.0]

    def test_radius_excludes_far_visits(self):
        dest = Poi(id="p1", name="p1", location=GeoPoint(39.9, 116.4), category_l1="coffee-shop")
        far = Poi(id="p2", name="p2", location=GeoPoint(39.95, 116.4), category_l1="office")
        q = QueryRecord("u1", BASE_TS, GeoPoint(39.89, 116.39), "StarBrew", "route", "p1")
        visit = WifiRecord("u1", BASE_TS + 3600, "p2")  # ~5.5 km from dest
        _, v_norm, _ = query_visit_correlation([q], [visit], [dest, far])
        assert v_norm == [0.0]

    def test_single_day_r2_absent(self):
        dest = Poi(id="p1", name="p1", location=GeoPoint(39.9, 116.4), category_l1="coffee-shop")
        q = QueryRecord("u1", BASE_TS, GeoPoint(39.89, 116.39), "StarBrew", "route", "p1")
        _, _, r2 = query_visit_correlation([q], [], [dest])
        assert r2 is None


class TestSyntheticCorrelation:
    def test_planted_conversion_high_r2(self):
        queries, pois, wifi, _ = generate_city(correlation_cfg(independent=False))
        q_norm, _, r2 = query_visit_correlation(queries, wifi, pois)
        assert len(q_norm) == 90
        assert r2 is not None and r2 > 0.8

    def test_independent_streams_low_r2(self):
        queries, pois, wifi, _ = generate_city(correlation_cfg(independent=True))
        _, v_norm, r2 = query_visit_correlation(queries, wifi, pois)
        assert r2 is not None and r2 < 0.2
        # accidental matches exist; the series is not degenerate
        assert any(v > 0 for v in v_norm)
