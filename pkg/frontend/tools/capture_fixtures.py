#!/usr/bin/env python3
"""Capture API responses from a seeded fixture city for the UI tests.

Boots the HTTP service in-process over the deterministic fixture city and
snapshots every endpoint the UI consumes, plus the offline feature row of
one store for the what-if parity check. Regenerate with:

    python3 tools/capture_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from storegap import CityConfig, generate_city
from storegap.demand import ExclusionParams
from storegap.features import FEATURE_NAMES, feature_vector
from storegap.learners import ModelSpec
from storegap.service import SessionState, create_app
from storegap.synth import Hotspot

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def fixture_city():
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
        hotspots=[
            Hotspot(39.95, 116.32, 300.0, 25.0),
            Hotspot(39.87, 116.48, 300.0, 20.0),
            Hotspot(39.99, 116.50, 300.0, 22.0),
        ],
        base_visit_rate=6.0,
        noise_query_rate=20.0,
    )
    return cfg, generate_city(cfg)


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    cfg, (queries, pois, wifi, _) = fixture_city()
    state = SessionState(
        queries=queries,
        pois=pois,
        wifi=wifi,
        aliases=cfg.aliases,
        default_spec=ModelSpec(kind="rf", seed=0),
        params=ExclusionParams(mode="deterministic", theta=0.35),
        seed=0,
        k=10,
    )
    client = TestClient(create_app(state))

    def save(name: str, response) -> None:
        assert response.status_code == 200, f"{name}: {response.status_code} {response.text}"
        (OUT / name).write_bytes(response.content)
        print(f"wrote {name}")

    save("categories.json", client.get("/api/categories"))
    save(
        "heatmap.json",
        client.get("/api/heatmap", params={"target": "coffee-shop", "cell_m": 500}),
    )
    body = {"target": {"kind": "category", "name": "coffee-shop"}, "k": 10}
    save("ranking.json", client.post("/api/rank", json=body))
    save("demand_centers.json", client.post("/api/demand-centers", json=body))

    store = next(p for p in pois if p.category_l1 == "coffee-shop")
    save(
        "analyze_store.json",
        client.get(
            "/api/analyze",
            params={"lat": store.location.lat, "lng": store.location.lng, "target": "coffee-shop"},
        ),
    )
    save(
        "analyze_desert.json",
        client.get("/api/analyze", params={"lat": 39.801, "lng": 116.251, "target": "coffee-shop"}),
    )

    # offline feature row of the analyzed store, same convention as features.csv
    ctx = state.context_for("coffee-shop")
    fv = feature_vector(store.location, ctx, exclude_poi=store.id)
    row = {
        "id": store.id,
        "lat": store.location.lat,
        "lng": store.location.lng,
        "features": fv.as_dict(),
        "csv_cells": {name: repr(float(v)) for name, v in zip(FEATURE_NAMES, fv.as_array())},
    }
    (OUT / "offline_store_row.json").write_text(json.dumps(row, indent=2, sort_keys=True))
    print("wrote offline_store_row.json")

    # an empty heatmap for the no-demand notice path
    (OUT / "heatmap_empty.json").write_text("[]\n")
    print("wrote heatmap_empty.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
