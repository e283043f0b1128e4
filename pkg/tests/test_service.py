"""HTTP service endpoints: contracts, error codes, CLI parity, determinism."""

from __future__ import annotations

import json
import math

import pytest
from fastapi.testclient import TestClient

from storegap import CityConfig, generate_city
from storegap.artifacts import render_demand_centers, render_ranking
from storegap.demand import ExclusionParams, Target, bucket_points, extract_demand, find_demand_centers
from storegap.evaluate import run_pipeline
from storegap.learners import ModelSpec
from storegap.service import SessionState, create_app
from storegap.synth import Hotspot


def service_city():
    cfg = CityConfig(
        seed=17,
        days=8,
        n_users=200,
        poi_counts={
            "coffee-shop": 50,
            "restaurant": 90,
            "office": 70,
            "transport": 40,
            "real-estate": 35,
        },
        brand_shares={"coffee-shop": {"StarBrew": 0.3, "KafeKo": 0.2}},
        hotspots=[Hotspot(39.95, 116.32, 300.0, 25.0), Hotspot(39.87, 116.48, 300.0, 20.0)],
        base_visit_rate=6.0,
        noise_query_rate=20.0,
    )
    return cfg, generate_city(cfg)


def make_state(**overrides):
    cfg, (queries, pois, wifi, _) = service_city()
    kwargs = dict(
        queries=queries,
        pois=pois,
        wifi=wifi,
        aliases=cfg.aliases,
        default_spec=ModelSpec(kind="rf", seed=0),
        params=ExclusionParams(mode="deterministic", theta=0.35),
        seed=0,
        k=10,
    )
    kwargs.update(overrides)
    return cfg, SessionState(**kwargs)


@pytest.fixture(scope="module")
def client():
    _, state = make_state()
    return TestClient(create_app(state)), state


class TestHealthAndCategories:
    def test_health(self, client):
        c, state = client
        r = c.get("/api/health")
        assert r.status_code == 200
        assert r.json()["status"] == "ok"
        assert r.json()["n_pois"] == len(state.pois)

    def test_categories_counts(self, client):
        c, state = client
        r = c.get("/api/categories")
        assert r.status_code == 200
        rows = r.json()
        names = [row["category"] for row in rows]
        assert names == sorted(names)
        coffee = next(row for row in rows if row["category"] == "coffee-shop")
        assert coffee["poi_count"] == 50
        assert "StarBrew" in coffee["brands"]

    def test_idempotent(self, client):
        c, _ = client
        assert c.get("/api/categories").content == c.get("/api/categories").content


class TestDemandCenters:
    def test_parity_with_library_rendering(self, client):
        c, state = client
        r = c.post("/api/demand-centers", json={"target": {"kind": "category", "name": "coffee-shop"}})
        assert r.status_code == 200
        centers = find_demand_centers(
            state.queries,
            state.pois,
            Target("category", "coffee-shop"),
            state.params,
            alias_table=state.aliases,
            fallback_threshold_m=state.fallback_threshold_m,
            rng_seed=state.seed,
            tz_offset_hours=state.tz_offset_hours,
        )
        assert r.content.decode() == render_demand_centers(centers)

    def test_unknown_target_404(self, client):
        c, _ = client
        r = c.post("/api/demand-centers", json={"target": {"kind": "category", "name": "nope"}})
        assert r.status_code == 404

    def test_invalid_params_422(self, client):
        c, _ = client
        r = c.post(
            "/api/demand-centers",
            json={"target": {"kind": "category", "name": "coffee-shop"}, "params": {"alpha": 1.5}},
        )
        assert r.status_code == 422


class TestRank:
    def test_parity_with_pipeline(self, client):
        c, state = client
        body = {"target": {"kind": "category", "name": "coffee-shop"}, "k": 10}
        r = c.post("/api/rank", json=body)
        assert r.status_code == 200
        result = run_pipeline(
            state.queries,
            state.pois,
            state.wifi,
            Target("category", "coffee-shop"),
            state.params,
            state.default_spec,
            k=10,
            alias_table=state.aliases,
            seed=state.seed,
            fallback_threshold_m=state.fallback_threshold_m,
            tz_offset_hours=state.tz_offset_hours,
        )
        assert r.content.decode() == render_ranking(result)

    def test_empty_demand_409(self, client):
        c, _ = client
        r = c.post("/api/rank", json={"target": {"kind": "brand", "name": "KafeKo"}})
        # KafeKo stores exist across the city; with deterministic exclusion the
        # brand demand may or may not survive. Accept either a ranking or 409,
        # but the status must be one of the two contract codes.
        assert r.status_code in (200, 409)

    def test_unknown_target_404_and_bad_spec_422(self, client):
        c, _ = client
        assert c.post("/api/rank", json={"target": {"kind": "brand", "name": "zzz"}}).status_code == 404
        r = c.post(
            "/api/rank",
            json={"target": {"kind": "category", "name": "coffee-shop"}, "model_spec": {"kind": "svm"}},
        )
        assert r.status_code == 422

    def test_baseline_seeded_reproducible(self, client):
        c, _ = client
        body = {
            "target": {"kind": "category", "name": "coffee-shop"},
            "model_spec": {"kind": "baseline"},
            "seed": 5,
        }
        a = c.post("/api/rank", json=body)
        b = c.post("/api/rank", json=body)
        assert a.content == b.content


class TestAnalyze:
    def test_existing_store_matches_offline_row(self, client):
        from storegap.evaluate import build_training_data
        from storegap.features import feature_vector

        c, state = client
        store = next(p for p in state.pois if p.category_l1 == "coffee-shop")
        r = c.get(
            "/api/analyze",
            params={"lat": store.location.lat, "lng": store.location.lng, "target": "coffee-shop"},
        )
        assert r.status_code == 200
        ctx = state.context_for("coffee-shop")
        offline = feature_vector(store.location, ctx, exclude_poi=store.id)
        assert r.json()["features"] == offline.as_dict()

    def test_desert_point_returns_zeroish(self, client):
        c, state = client
        r = c.get("/api/analyze", params={"lat": 39.801, "lng": 116.251, "target": "coffee-shop"})
        assert r.status_code == 200
        features = r.json()["features"]
        assert features["poi_density"] == features["area_popularity"] == 0.0
        assert math.isfinite(r.json()["predicted_customers"])

    def test_repeated_identical(self, client):
        c, _ = client
        params = {"lat": 39.9, "lng": 116.4, "target": "coffee-shop"}
        assert c.get("/api/analyze", params=params).content == c.get("/api/analyze", params=params).content

    def test_malformed_coordinates_400(self, client):
        c, _ = client
        assert c.get("/api/analyze", params={"lat": "abc", "lng": 1, "target": "coffee-shop"}).status_code == 400
        assert c.get("/api/analyze", params={"lat": 99, "lng": 1, "target": "coffee-shop"}).status_code == 400


class TestHeatmap:
    def test_conservation_and_parity(self, client):
        c, state = client
        r = c.get("/api/heatmap", params={"target": "coffee-shop", "cell_m": 500})
        assert r.status_code == 200
        cells = r.json()
        points = extract_demand(state.queries, state.pois, Target("category", "coffee-shop"), state.aliases)
        assert sum(cell["demand_count"] for cell in cells) == len(points)
        oracle = bucket_points(points, 500.0, state.city_center)
        assert cells == [
            {"lat": lat, "lng": lng, "demand_count": n} for lat, lng, n in oracle
        ]

    def test_tiny_cells_422(self, client):
        c, _ = client
        assert c.get("/api/heatmap", params={"target": "coffee-shop", "cell_m": 10}).status_code == 422


class TestCacheAndDeterminism:
    def test_cache_delete_does_not_change_bodies(self, client):
        c, _ = client
        body = {"target": {"kind": "category", "name": "coffee-shop"}, "k": 5}
        before = c.post("/api/rank", json=body).content
        assert c.delete("/api/cache").status_code == 200
        after = c.post("/api/rank", json=body).content
        assert before == after

    def test_fresh_state_reproduces_responses(self):
        _, state_a = make_state()
        _, state_b = make_state()
        ca = TestClient(create_app(state_a))
        cb = TestClient(create_app(state_b))
        body = {"target": {"kind": "category", "name": "coffee-shop"}, "k": 10}
        for method, path, kwargs in [
            ("get", "/api/categories", {}),
            ("post", "/api/demand-centers", {"json": body}),
            ("post", "/api/rank", {"json": body}),
            ("get", "/api/analyze", {"params": {"lat": 39.9, "lng": 116.4, "target": "coffee-shop"}}),
            ("get", "/api/heatmap", {"params": {"target": "coffee-shop", "cell_m": 400}}),
        ]:
            ra = getattr(ca, method)(path, **kwargs)
            rb = getattr(cb, method)(path, **kwargs)
            assert ra.content == rb.content, path


class TestJobs:
    def test_async_rank_completes_via_polling(self):
        import time

        _, state = make_state(sync_wait_s=0.0)
        c = TestClient(create_app(state))
        body = {"target": {"kind": "category", "name": "coffee-shop"}, "k": 5}
        r = c.post("/api/rank", json=body)
        assert r.status_code == 202
        job_id = r.json()["job_id"]
        deadline = time.time() + 60
        while time.time() < deadline:
            poll = c.get(f"/api/jobs/{job_id}")
            if poll.status_code != 202:
                break
            time.sleep(0.1)
        assert poll.status_code == 200
        rows = json.loads(poll.content)
        assert rows and rows[0]["rank"] == 1

    def test_unknown_job_404(self, client):
        c, _ = client
        assert c.get("/api/jobs/deadbeef").status_code == 404
