"""Parsing, anonymization, and visit integration."""

from __future__ import annotations

import json

import numpy as np
import pytest

from storegap.geo import GeoPoint
from storegap.ingest import (
    Poi,
    QueryRecord,
    WifiRecord,
    anonymize,
    integrate_visits,
    parse_pois,
    parse_queries,
    parse_wifi,
    pois_to_csv,
    queries_to_jsonl,
    wifi_to_jsonl,
)

DAY = 86_400


def make_query_line(**overrides):
    obj = {
        "user_id": "u1",
        "ts": 1_420_070_400,
        "lat": 39.9,
        "lng": 116.4,
        "keyword": "coffee",
        "kind": "nearby",
        "poi_id": None,
    }
    obj.update(overrides)
    return json.dumps(obj)


class TestParseQueries:
    def test_empty_stream(self):
        result = parse_queries([])
        assert result.records == []
        assert result.rejected == 0

    def test_single_route_line(self):
        line = make_query_line(kind="route", poi_id="p1", keyword="StarBrew")
        result = parse_queries([line])
        assert result.rejected == 0
        (rec,) = result.records
        assert rec.query_kind == "route"
        assert rec.target_poi_id == "p1"

    def test_corrupt_lines_skipped_not_fatal(self):
        lines = [
            make_query_line(ts=1),
            "this is not json",
            make_query_line(ts=2),
            json.dumps({"user_id": "u", "ts": 3}),  # missing required fields
            make_query_line(ts=4),
        ]
        result = parse_queries(lines)
        assert len(result.records) == 3
        assert result.rejected == 2
        assert [r.timestamp for r in result.records] == [1, 2, 4]

    def test_route_requires_target(self):
        result = parse_queries([make_query_line(kind="route", poi_id=None)])
        assert result.records == []
        assert result.rejected == 1

    def test_roundtrip_identity(self):
        lines = [
            make_query_line(ts=10),
            make_query_line(ts=20, kind="route", poi_id="p7", keyword="hotpot"),
        ]
        records = parse_queries(lines).records
        again = parse_queries(queries_to_jsonl(records).splitlines()).records
        assert again == records


class TestAnonymize:
    def test_deterministic_per_salt(self):
        assert anonymize("user-1", "salt-a") == anonymize("user-1", "salt-a")

    def test_salts_unlinkable(self):
        assert anonymize("user-1", "salt-a") != anonymize("user-1", "salt-b")

    def test_no_collisions_on_10k_ids(self):
        hashes = {anonymize(f"user-{i}", "s") for i in range(10_000)}
        assert len(hashes) == 10_000

    def test_fixed_length_hex(self):
        h = anonymize("anyone", "pepper")
        assert len(h) == 64
        int(h, 16)

    def test_empty_salt_rejected(self):
        with pytest.raises(ValueError):
            anonymize("user", "")


def poi(pid, lat=39.9, lng=116.4, cat="coffee-shop", brand=None, price=None):
    return Poi(id=pid, name=pid, location=GeoPoint(lat, lng), category_l1=cat, brand=brand, unit_price=price)


class TestIntegrateVisits:
    def test_same_day_connections_dedup_to_one(self):
        pois = [poi("p1")]
        base = 1_420_070_400
        wifi = [WifiRecord("u1", base + i * 600, "p1") for i in range(5)]
        table = integrate_visits(wifi, pois)
        assert table.count("p1") == 1

    def test_distinct_days_counted(self):
        pois = [poi("p1")]
        base = 1_420_070_400
        wifi = [WifiRecord("u1", base + d * DAY, "p1") for d in range(3)]
        assert integrate_visits(wifi, pois).count("p1") == 3

    def test_full_cross_product(self):
        pois = [poi("p1"), poi("p2")]
        base = 1_420_070_400
        wifi = [
            WifiRecord(u, base + d * DAY, p)
            for u in ("u1", "u2")
            for d in range(2)
            for p in ("p1", "p2")
        ]
        table = integrate_visits(wifi, pois)
        assert table.count("p1") == 4
        assert table.count("p2") == 4

    def test_unresolvable_poi_dropped_and_counted(self):
        table = integrate_visits([WifiRecord("u1", 1_420_070_400, "ghost")], [poi("p1")])
        assert table.count("ghost") == 0
        assert table.dropped == 1

    def test_permutation_invariant(self):
        rng = np.random.default_rng(3)
        pois = [poi(f"p{i}") for i in range(4)]
        base = 1_420_070_400
        wifi = [
            WifiRecord(f"u{rng.integers(5)}", base + int(rng.integers(10)) * DAY, f"p{rng.integers(4)}")
            for _ in range(200)
        ]
        t1 = integrate_visits(wifi, pois)
        shuffled = [wifi[i] for i in rng.permutation(len(wifi))]
        t2 = integrate_visits(shuffled, pois)
        assert t1.counts == t2.counts

    def test_day_boundary_uses_fixed_offset(self):
        pois = [poi("p1")]
        # 23:30 and 00:30 local (UTC+8) on consecutive days
        just_before = 1_420_070_400 + 23 * 3600 + 1800 - 8 * 3600
        just_after = just_before + 3600
        table = integrate_visits(
            [WifiRecord("u1", just_before, "p1"), WifiRecord("u1", just_after, "p1")], pois
        )
        assert table.count("p1") == 2


class TestPoiCsv:
    def test_roundtrip(self):
        pois = [
            poi("p1", brand="StarBrew"),
            poi("p2", cat="real-estate", price=52_000.5),
        ]
        parsed = parse_pois(pois_to_csv(pois).splitlines())
        assert parsed.rejected == 0
        assert parsed.records == pois

    def test_bad_rows_counted(self):
        text = pois_to_csv([poi("p1")]) + "bad,row\n"
        parsed = parse_pois(text.splitlines())
        assert len(parsed.records) == 1
        assert parsed.rejected == 1


class TestWifiJsonl:
    def test_roundtrip(self):
        records = [WifiRecord("u1", 123, "p1"), WifiRecord("u2", 456, "p2")]
        assert parse_wifi(wifi_to_jsonl(records).splitlines()).records == records
