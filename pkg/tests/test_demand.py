"""Demand extraction, supply exclusion, and MeanShift clustering."""

from __future__ import annotations

import math

import numpy as np
import pytest

from storegap.demand import (
    DemandPoint,
    ExclusionParams,
    Target,
    bucket_points,
    effective_distance,
    exclude_general,
    exclude_specific,
    extract_demand,
    find_demand_centers,
    mean_shift,
    retention_components,
    retention_score,
    temporal_profile,
)
from storegap.geo import GeoPoint, haversine_m
from storegap.ingest import Poi, QueryRecord

M_PER_DEG_LAT = math.pi * 6_371_000.0 / 180.0
BASE_TS = 1_420_070_400  # 2015-01-01 00:00 UTC


def poi(pid, lat=39.9, lng=116.4, cat="coffee-shop", brand=None):
    return Poi(id=pid, name=pid, location=GeoPoint(lat, lng), category_l1=cat, brand=brand)


def north_of(p: GeoPoint, meters: float) -> GeoPoint:
    return GeoPoint(p.lat + meters / M_PER_DEG_LAT, p.lng)


def query(kind, keyword, lat=39.9, lng=116.4, ts=BASE_TS + 12 * 3600, user="u1", poi_id=None):
    return QueryRecord(user, ts, GeoPoint(lat, lng), keyword, kind, poi_id)


class TestExtractDemand:
    def test_route_query_to_brand_store(self):
        pois = [poi("p1", brand="StarBrew")]
        queries = [query("route", "StarBrew", lat=40.02, lng=116.34, poi_id="p1")]
        points = extract_demand(queries, pois, Target("brand", "StarBrew"))
        assert len(points) == 1
        assert points[0].kind == "specific"
        assert points[0].location == GeoPoint(40.02, 116.34)

    def test_nearby_query_via_alias(self):
        points = extract_demand(
            [query("nearby", "coffee")],
            [],
            Target("category", "coffee-shop"),
            alias_table={"coffee": "coffee-shop"},
        )
        assert len(points) == 1
        assert points[0].kind == "general"
        assert points[0].label == "coffee-shop"

    def test_mixed_fixture_keeps_matches_in_order(self):
        pois = [poi("p1", brand="StarBrew"), poi("p2", cat="hotel")]
        queries = [
            query("route", "StarBrew", ts=BASE_TS + 1, poi_id="p1"),
            query("nearby", "coffee", ts=BASE_TS + 2),
            query("route", "somewhere", ts=BASE_TS + 3, poi_id="p2"),
            query("route", "starbrew", ts=BASE_TS + 4, poi_id="p2"),  # keyword match
            query("nearby", "StarBrew", ts=BASE_TS + 5),  # wrong kind for specific
            query("route", "StarBrew", ts=BASE_TS + 6, poi_id="p1"),
            query("nearby", "hotel", ts=BASE_TS + 7),
            query("route", "ＳｔａｒＢｒｅｗ", ts=BASE_TS + 8, poi_id="p2"),  # full-width
            query("nearby", "tea", ts=BASE_TS + 9),
            query("route", "other", ts=BASE_TS + 10, poi_id="p2"),
        ]
        points = extract_demand(queries, pois, Target("brand", "StarBrew"))
        assert [p.timestamp - BASE_TS for p in points] == [1, 4, 6, 8]

    def test_unknown_target_warns_and_returns_empty(self):
        with pytest.warns(UserWarning):
            points = extract_demand([query("nearby", "coffee")], [], Target("brand", "NoSuch"))
        assert points == []


class TestTemporalProfile:
    def test_all_points_at_noon(self):
        pts = [DemandPoint(GeoPoint(39.9, 116.4), BASE_TS + 4 * 3600, "general", "c") for _ in range(5)]
        # 04:00 UTC = 12:00 UTC+8
        profile = temporal_profile(pts)
        assert profile.hour_hist[12] == 5
        assert sum(profile.hour_hist) == 5

    def test_distance_cdf_two_routes(self):
        o = GeoPoint(39.9, 116.4)
        pairs = [(o, north_of(o, 1000.0)), (o, north_of(o, 3000.0))]
        profile = temporal_profile([], pairs)
        (d1, f1), (d2, f2) = profile.sd_distance_cdf
        assert d1 == pytest.approx(1000.0, abs=0.01)
        assert f1 == 0.5
        assert d2 == pytest.approx(3000.0, abs=0.01)
        assert f2 == 1.0

    def test_empty_input(self):
        profile = temporal_profile([])
        assert sum(profile.hour_hist) == 0
        assert profile.sd_distance_cdf == []

    def test_planted_meal_profile_is_bimodal(self):
        from storegap import CityConfig, generate_city

        cfg = CityConfig(seed=8, days=10, n_users=200)  # default lunch/dinner weights
        queries, pois, _, _ = generate_city(cfg)
        points = extract_demand(queries, pois, Target("category", "coffee-shop"), cfg.aliases)
        hist = temporal_profile(points).hour_hist
        lunch = max(hist[11:14])
        dinner = max(hist[18:21])
        trough = min(hist[14:18])
        assert lunch > trough and dinner > trough
        assert min(lunch, dinner) > 1.5 * max(hist[0:6])


class TestEffectiveDistance:
    def test_eighty_percent_within_2km(self):
        o = GeoPoint(39.9, 116.4)
        pairs = [(o, north_of(o, 2000.0))] * 8 + [(o, north_of(o, 9000.0))] * 2
        profile = temporal_profile([], pairs)
        assert effective_distance(profile, 0.8) == pytest.approx(2000.0, abs=0.01)

    def test_single_distance(self):
        o = GeoPoint(39.9, 116.4)
        profile = temporal_profile([], [(o, north_of(o, 1234.0))])
        for p in (0.1, 0.5, 0.9):
            assert effective_distance(profile, p) == pytest.approx(1234.0, abs=0.01)

    def test_uniform_grid_matches_order_statistic(self):
        o = GeoPoint(39.9, 116.4)
        dists = [100.0 * (i + 1) for i in range(100)]
        pairs = [(o, north_of(o, d)) for d in dists]
        profile = temporal_profile([], pairs)
        got = effective_distance(profile, 0.8)
        expected = sorted(haversine_m(o, north_of(o, d)) for d in dists)[79]  # first with cum >= 0.8
        assert got == pytest.approx(expected, rel=1e-12)

    def test_empty_cdf_is_error(self):
        with pytest.raises(ValueError):
            effective_distance(temporal_profile([]), 0.8)


def demand_at(p: GeoPoint, kind="general", label="coffee-shop"):
    return DemandPoint(p, BASE_TS, kind, label)


class TestExcludeSpecific:
    def test_point_at_store_location_excluded(self):
        store = poi("s1", brand="StarBrew")
        assert exclude_specific([demand_at(store.location)], [store], 500.0) == []

    def test_exact_threshold_excluded(self):
        store = poi("s1")
        target = north_of(store.location, 400.0)
        d = haversine_m(store.location, target)
        survivors = exclude_specific([demand_at(target)], [store], d)
        assert survivors == []
        survivors = exclude_specific([demand_at(target)], [store], d * (1 - 1e-12))
        assert len(survivors) == 1

    def test_zero_stores_identity(self):
        pts = [demand_at(GeoPoint(39.9, 116.4))]
        assert exclude_specific(pts, [], 100.0) == pts

    def test_matches_brute_force_filter(self):
        rng = np.random.default_rng(5)
        stores = [poi(f"s{i}", 39.9 + rng.uniform(-0.05, 0.05), 116.4 + rng.uniform(-0.05, 0.05)) for i in range(3)]
        pts = [
            demand_at(GeoPoint(39.9 + rng.uniform(-0.1, 0.1), 116.4 + rng.uniform(-0.1, 0.1)))
            for _ in range(100)
        ]
        threshold = 2000.0
        got = exclude_specific(pts, stores, threshold)
        expected = [
            p for p in pts if min(haversine_m(p.location, s.location) for s in stores) > threshold
        ]
        assert got == expected
        for p in got:
            assert min(haversine_m(p.location, s.location) for s in stores) > threshold
        for p in set(pts) - set(got):
            assert min(haversine_m(p.location, s.location) for s in stores) <= threshold


class TestRetention:
    def test_at_store_with_one_nearby(self):
        s_d, s_s, s_r = retention_components(0.0, 1, ExclusionParams())
        assert s_d == 0.0
        assert s_s == pytest.approx(math.exp(-0.5), rel=1e-15)
        assert s_r == pytest.approx(0.3 * math.exp(-0.5), rel=1e-15)
        assert s_r == pytest.approx(0.18195919791379003, rel=1e-12)

    def test_at_sigma_with_none_nearby(self):
        s_d, s_s, s_r = retention_components(300.0, 0, ExclusionParams())
        assert s_d == pytest.approx(1.0 - math.exp(-1.0), rel=1e-15)
        assert s_s == 1.0
        assert s_r == pytest.approx(0.7424843911799904, rel=1e-12)

    def test_alpha_one_collapses_to_distance_score(self):
        params = ExclusionParams(alpha=1.0)
        for n in (0, 1, 5, 50):
            s_d, _, s_r = retention_components(217.0, n, params)
            assert s_r == s_d

    def test_monotonicity(self):
        params = ExclusionParams()
        rng = np.random.default_rng(23)
        for _ in range(200):
            d = float(rng.uniform(0, 5000))
            n = int(rng.integers(0, 20))
            s_d1, s_s1, _ = retention_components(d, n, params)
            s_d2, _, _ = retention_components(d + float(rng.uniform(1, 500)), n, params)
            _, s_s2, _ = retention_components(d, n + 1, params)
            assert s_d2 >= s_d1
            if s_d1 < 1.0 - 1e-12:  # strictly increasing until float64 saturation
                assert s_d2 > s_d1
            assert s_s2 < s_s1

    def test_zero_stores_convention(self):
        p = demand_at(GeoPoint(39.9, 116.4))
        assert retention_score(p, [], ExclusionParams()) == 1.0

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ExclusionParams(alpha=1.5)
        with pytest.raises(ValueError):
            ExclusionParams(percentile=1.0)


class TestExcludeGeneral:
    def test_far_points_retained_in_both_modes(self):
        store = poi("s1", lat=39.0, lng=116.0)
        pts = [demand_at(GeoPoint(39.99, 116.99))]  # ~100 km away
        for mode in ("probabilistic", "deterministic"):
            params = ExclusionParams(mode=mode, theta=0.99)
            assert exclude_general(pts, [store], params, rng_seed=1) == pts

    def test_deterministic_threshold_fixture(self):
        store = poi("s1")
        params = ExclusionParams(mode="deterministic", theta=0.5)
        offsets = [0.0, 100.0, 200.0, 300.0, 500.0, 2000.0]
        pts = [demand_at(north_of(store.location, off)) for off in offsets]
        # hand evaluation of S_r per point from the actual distances
        expected = []
        for p in pts:
            d = haversine_m(p.location, store.location)
            n = 1 if d <= params.supply_count_radius_m else 0
            _, _, s_r = retention_components(d, n, params)
            if s_r >= params.theta:
                expected.append(p)
        got = exclude_general(pts, [store], params)
        assert got == expected
        assert [haversine_m(p.location, store.location) for p in got] == pytest.approx(
            [300.0, 500.0, 2000.0], abs=0.01
        )

    def test_probabilistic_retention_frequency(self):
        store = poi("s1")
        params = ExclusionParams(supply_count_radius_m=200.0)  # N=0 at 300 m
        point = demand_at(north_of(store.location, 300.0))
        d = haversine_m(point.location, store.location)
        _, _, s_r = retention_components(d, 0, params)
        assert s_r == pytest.approx(0.742, abs=5e-4)
        pts = [point] * 10_000
        survivors = exclude_general(pts, [store], params, rng_seed=42)
        assert len(survivors) / 10_000 == pytest.approx(s_r, abs=0.02)

    def test_seeded_determinism(self):
        rng = np.random.default_rng(9)
        store = poi("s1")
        pts = [demand_at(north_of(store.location, float(rng.uniform(0, 2000)))) for _ in range(50)]
        a = exclude_general(pts, [store], ExclusionParams(), rng_seed=7)
        b = exclude_general(pts, [store], ExclusionParams(), rng_seed=7)
        assert a == b


# --- MeanShift oracle: independent naive fixed-point implementation ----------


def naive_mean_shift(points, bandwidth_m, weights=None, tol=1.0, max_iter=300):
    """Pure-python reference with the same kernel, tolerance and merge rule.

    Means are taken directly on (lat, lng); the production projection is
    affine in both, so the two agree to well under the 1 m tolerance.
    """
    n = len(points)
    w = [1.0] * n if weights is None else list(weights)
    modes = []
    for i in range(n):
        pos = points[i]
        for _ in range(max_iter):
            members = [j for j in range(n) if haversine_m(pos, points[j]) <= bandwidth_m]
            tw = sum(w[j] for j in members)
            if tw <= 0:
                mw = {j: 1.0 for j in members}
                tw = float(len(members))
            else:
                mw = {j: w[j] for j in members}
            lat = sum(points[j].lat * mw[j] for j in members) / tw
            lng = sum(points[j].lng * mw[j] for j in members) / tw
            new = GeoPoint(lat, lng)
            shift = haversine_m(pos, new)
            pos = new
            if shift < tol:
                break
        modes.append(pos)
    support = [
        sum(1 for j in range(n) if haversine_m(m, points[j]) <= bandwidth_m) for m in modes
    ]
    order = sorted(range(n), key=lambda i: (-support[i], modes[i].lat, modes[i].lng))
    kept = []
    for i in order:
        if all(haversine_m(modes[i], c) > bandwidth_m / 2.0 for c in kept):
            kept.append(modes[i])
    counts = [0] * len(kept)
    wsums = [0.0] * len(kept)
    for j, p in enumerate(points):
        dists = [haversine_m(p, c) for c in kept]
        best = min(range(len(kept)), key=lambda ci: (dists[ci], ci))
        counts[best] += 1
        wsums[best] += w[j]
    result = [(c, counts[i], wsums[i]) for i, c in enumerate(kept) if counts[i] > 0]
    result.sort(key=lambda t: (-t[1], t[0].lat, t[0].lng))
    return result


def random_cloud(rng, n, n_blobs=2, spread_m=150.0, sep_m=2500.0):
    base = GeoPoint(39.9, 116.4)
    centers = [
        GeoPoint(base.lat + (i * sep_m) / M_PER_DEG_LAT, base.lng + float(rng.uniform(-0.01, 0.01)))
        for i in range(n_blobs)
    ]
    pts = []
    for _ in range(n):
        c = centers[int(rng.integers(n_blobs))]
        pts.append(
            GeoPoint(
                c.lat + float(rng.normal(0, spread_m)) / M_PER_DEG_LAT,
                c.lng + float(rng.normal(0, spread_m)) / (M_PER_DEG_LAT * math.cos(math.radians(c.lat))),
            )
        )
    return pts


class TestMeanShift:
    def test_identical_points_single_center(self):
        p = GeoPoint(39.9, 116.4)
        centers = mean_shift([p] * 7, bandwidth_m=500.0)
        assert len(centers) == 1
        assert centers[0].member_count == 7
        assert haversine_m(centers[0].location, p) < 1e-6

    def test_two_separated_blobs(self):
        rng = np.random.default_rng(3)
        bandwidth = 500.0
        blob_a = [
            GeoPoint(39.9 + float(rng.normal(0, 10)) / M_PER_DEG_LAT, 116.4) for _ in range(8)
        ]
        blob_b = [
            GeoPoint(39.9 + (10 * bandwidth + float(rng.normal(0, 10))) / M_PER_DEG_LAT, 116.4)
            for _ in range(5)
        ]
        centers = mean_shift(blob_a + blob_b, bandwidth_m=bandwidth)
        assert len(centers) == 2
        mean_a = GeoPoint(sum(p.lat for p in blob_a) / 8, sum(p.lng for p in blob_a) / 8)
        mean_b = GeoPoint(sum(p.lat for p in blob_b) / 5, sum(p.lng for p in blob_b) / 5)
        assert haversine_m(centers[0].location, mean_a) < 1.0
        assert haversine_m(centers[1].location, mean_b) < 1.0
        assert centers[0].member_count == 8
        assert centers[1].member_count == 5

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_naive_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 31))
        pts = random_cloud(rng, n, n_blobs=int(rng.integers(1, 4)), spread_m=200.0, sep_m=3000.0)
        weights = None if seed % 2 == 0 else [float(rng.uniform(0.1, 2.0)) for _ in range(n)]
        got = mean_shift(pts, bandwidth_m=600.0, weights=weights)
        expected = naive_mean_shift(pts, 600.0, weights=weights)
        assert len(got) == len(expected)
        for center, (loc, count, wsum) in zip(got, expected):
            assert haversine_m(center.location, loc) < 1.0
            assert center.member_count == count
            assert center.weight == pytest.approx(wsum, rel=1e-9)

    def test_invariants(self):
        rng = np.random.default_rng(31)
        pts = random_cloud(rng, 60, n_blobs=3)
        centers = mean_shift(pts, bandwidth_m=700.0)
        assert sum(c.member_count for c in centers) == len(pts)
        for c in centers:
            assert min(haversine_m(c.location, p) for p in pts) <= 700.0 + 1.0

    def test_weight_scaling_invariance(self):
        rng = np.random.default_rng(37)
        pts = random_cloud(rng, 40)
        w = [float(rng.uniform(0.5, 3.0)) for _ in range(40)]
        a = mean_shift(pts, bandwidth_m=600.0, weights=w)
        b = mean_shift(pts, bandwidth_m=600.0, weights=[5.0 * x for x in w])
        assert len(a) == len(b)
        for ca, cb in zip(a, b):
            assert haversine_m(ca.location, cb.location) < 1e-6
            assert ca.member_count == cb.member_count

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            mean_shift([], bandwidth_m=100.0)


class TestFindDemandCenters:
    def test_complete_supply_gives_empty(self):
        store = poi("s1", brand="StarBrew")
        origin = north_of(store.location, 500.0)
        queries = [
            QueryRecord("u1", BASE_TS + i, origin, "StarBrew", "route", "s1") for i in range(60)
        ]
        centers = find_demand_centers(queries, [store], Target("brand", "StarBrew"), ExclusionParams())
        assert centers == []

    def test_no_stores_all_points_survive(self):
        origins = [north_of(GeoPoint(39.9, 116.4), 50.0 * i) for i in range(20)]
        queries = [
            QueryRecord("u1", BASE_TS + i, o, "juice", "nearby", None)
            for i, o in enumerate(origins, start=1)
        ]
        centers = find_demand_centers(
            queries,
            [poi("p1", cat="office")],
            Target("category", "juice-bar"),
            ExclusionParams(),
            alias_table={"juice": "juice-bar"},
            fallback_threshold_m=1500.0,
        )
        assert sum(c.member_count for c in centers) == 20

    def test_deterministic_replay(self):
        rng = np.random.default_rng(43)
        store = poi("s1", cat="coffee-shop")
        queries = [
            QueryRecord(
                "u1",
                BASE_TS + i + 1,
                GeoPoint(39.9 + float(rng.uniform(0, 0.05)), 116.4 + float(rng.uniform(0, 0.05))),
                "coffee",
                "nearby",
                None,
            )
            for i in range(80)
        ]
        kwargs = dict(
            alias_table={"coffee": "coffee-shop"}, fallback_threshold_m=1200.0, rng_seed=5
        )
        a = find_demand_centers(queries, [store], Target("category", "coffee-shop"), ExclusionParams(), **kwargs)
        b = find_demand_centers(queries, [store], Target("category", "coffee-shop"), ExclusionParams(), **kwargs)
        assert a == b


class TestBucketPoints:
    def test_single_point(self):
        anchor = GeoPoint(39.9, 116.4)
        cells = bucket_points([demand_at(GeoPoint(39.91, 116.41))], 500.0, anchor)
        assert len(cells) == 1
        assert cells[0][2] == 1

    def test_conservation(self):
        rng = np.random.default_rng(41)
        pts = [demand_at(GeoPoint(39.9 + rng.uniform(0, 0.1), 116.4 + rng.uniform(0, 0.1))) for _ in range(137)]
        cells = bucket_points(pts, 800.0, GeoPoint(39.9, 116.4))
        assert sum(c for _, _, c in cells) == 137
