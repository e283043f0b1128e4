"""Parsing, validation, anonymization and integration of the raw data sets.

Three inputs drive everything downstream: map queries (where demand is
expressed), POIs (what exists), and WiFi connection records (who actually
visited). File schemas:

- queries.jsonl: {"user_id", "ts", "lat", "lng", "keyword", "kind", "poi_id"}
- pois.csv:      id,name,lat,lng,category_l1,category_l2,brand,unit_price
- wifi.jsonl:    {"user_id", "ts", "poi_id"}
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .geo import GeoPoint

QUERY_KINDS = ("route", "nearby")

DEFAULT_TZ_OFFSET_HOURS = 8  # calendar-day boundary for visit dedup

_SECONDS_PER_DAY = 86_400


@dataclass(frozen=True)
class QueryRecord:
    user_id: str
    timestamp: int
    origin: GeoPoint
    keyword: str
    query_kind: str
    target_poi_id: str | None = None

    def __post_init__(self) -> None:
        if self.timestamp <= 0:
            raise ValueError("timestamp must be > 0")
        if not self.keyword:
            raise ValueError("keyword must be non-empty")
        if self.query_kind not in QUERY_KINDS:
            raise ValueError(f"query_kind must be one of {QUERY_KINDS}")
        if self.query_kind == "route" and not self.target_poi_id:
            raise ValueError("route queries require target_poi_id")


@dataclass(frozen=True)
class Poi:
    id: str
    name: str
    location: GeoPoint
    category_l1: str
    category_l2: str = ""
    brand: str | None = None
    unit_price: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("poi id must be non-empty")
        if not self.category_l1:
            raise ValueError("category_l1 must be non-empty")


@dataclass(frozen=True)
class WifiRecord:
    user_id: str
    timestamp: int
    poi_id: str


@dataclass
class VisitTable:
    """Deduplicated (user, calendar-day) visit counts per POI."""

    counts: dict[str, int] = field(default_factory=dict)
    dropped: int = 0
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS

    def count(self, poi_id: str) -> int:
        return self.counts.get(poi_id, 0)

    def total(self) -> int:
        return sum(self.counts.values())


def normalize_keyword(s: str) -> str:
    """Trim, case-fold and map full-width forms to half-width."""
    return unicodedata.normalize("NFKC", s).strip().casefold()


def anonymize(raw_user_id: str, salt: str) -> str:
    """Salted SHA-256 of a raw id, hex encoded. Deterministic per salt."""
    if not salt:
        raise ValueError("salt must be non-empty")
    digest = hashlib.sha256()
    digest.update(salt.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(raw_user_id.encode("utf-8"))
    return digest.hexdigest()


def calendar_day(timestamp: int, tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS) -> int:
    """Day ordinal of an epoch timestamp at a fixed UTC offset."""
    return (timestamp + tz_offset_hours * 3600) // _SECONDS_PER_DAY


def local_hour(timestamp: int, tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS) -> int:
    return ((timestamp + tz_offset_hours * 3600) % _SECONDS_PER_DAY) // 3600


def local_weekday(timestamp: int, tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS) -> int:
    """0 = Monday. Epoch day 0 (1970-01-01) was a Thursday."""
    return (calendar_day(timestamp, tz_offset_hours) + 3) % 7


@dataclass
class ParseResult:
    records: list
    rejected: int = 0


def _query_from_obj(obj: dict) -> QueryRecord:
    poi_id = obj.get("poi_id")
    return QueryRecord(
        user_id=str(obj["user_id"]),
        timestamp=int(obj["ts"]),
        origin=GeoPoint(float(obj["lat"]), float(obj["lng"])),
        keyword=str(obj["keyword"]),
        query_kind=str(obj["kind"]),
        target_poi_id=str(poi_id) if poi_id not in (None, "") else None,
    )


def parse_queries(stream: Iterable[str]) -> ParseResult:
    """Parse query JSONL. Malformed lines are skipped and counted."""
    records: list[QueryRecord] = []
    rejected = 0
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            records.append(_query_from_obj(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            rejected += 1
    return ParseResult(records, rejected)


def parse_wifi(stream: Iterable[str]) -> ParseResult:
    records: list[WifiRecord] = []
    rejected = 0
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            ts = int(obj["ts"])
            if ts <= 0:
                raise ValueError("ts must be > 0")
            records.append(WifiRecord(str(obj["user_id"]), ts, str(obj["poi_id"])))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            rejected += 1
    return ParseResult(records, rejected)


POI_CSV_HEADER = ["id", "name", "lat", "lng", "category_l1", "category_l2", "brand", "unit_price"]


def parse_pois(stream: Iterable[str]) -> ParseResult:
    """Parse the POI CSV; empty string marks an absent optional field."""
    records: list[Poi] = []
    rejected = 0
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is not None and [h.strip() for h in header] != POI_CSV_HEADER:
        raise ValueError(f"unexpected pois.csv header: {header}")
    for row in reader:
        if not row:
            continue
        try:
            if len(row) != len(POI_CSV_HEADER):
                raise ValueError("wrong column count")
            price = float(row[7]) if row[7] != "" else None
            records.append(
                Poi(
                    id=row[0],
                    name=row[1],
                    location=GeoPoint(float(row[2]), float(row[3])),
                    category_l1=row[4],
                    category_l2=row[5],
                    brand=row[6] or None,
                    unit_price=price,
                )
            )
        except (ValueError, TypeError):
            rejected += 1
    return ParseResult(records, rejected)


def integrate_visits(
    wifi: Iterable[WifiRecord],
    pois: Iterable[Poi],
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS,
) -> VisitTable:
    """Customer count per POI: distinct (user, calendar-day) pairs.

    Records whose poi_id does not resolve against the POI set are dropped
    and counted. Result is independent of record order.
    """
    known = {p.id for p in pois}
    seen: set[tuple[str, str, int]] = set()
    dropped = 0
    for rec in wifi:
        if rec.poi_id not in known:
            dropped += 1
            continue
        seen.add((rec.poi_id, rec.user_id, calendar_day(rec.timestamp, tz_offset_hours)))
    counts: dict[str, int] = {}
    for poi_id, _, _ in seen:
        counts[poi_id] = counts.get(poi_id, 0) + 1
    return VisitTable(counts=counts, dropped=dropped, tz_offset_hours=tz_offset_hours)


# --- serialization (round-trip partners of the parsers above) ---


def query_to_json(q: QueryRecord) -> str:
    return json.dumps(
        {
            "user_id": q.user_id,
            "ts": q.timestamp,
            "lat": q.origin.lat,
            "lng": q.origin.lng,
            "keyword": q.keyword,
            "kind": q.query_kind,
            "poi_id": q.target_poi_id,
        },
        ensure_ascii=True,
        separators=(",", ":"),
    )


def wifi_to_json(w: WifiRecord) -> str:
    return json.dumps(
        {"user_id": w.user_id, "ts": w.timestamp, "poi_id": w.poi_id},
        ensure_ascii=True,
        separators=(",", ":"),
    )


def queries_to_jsonl(queries: Iterable[QueryRecord]) -> str:
    return "".join(query_to_json(q) + "\n" for q in queries)


def wifi_to_jsonl(records: Iterable[WifiRecord]) -> str:
    return "".join(wifi_to_json(w) + "\n" for w in records)


def pois_to_csv(pois: Iterable[Poi]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(POI_CSV_HEADER)
    for p in pois:
        price = "" if p.unit_price is None else repr(float(p.unit_price))
        writer.writerow(
            [
                p.id,
                p.name,
                repr(float(p.location.lat)),
                repr(float(p.location.lng)),
                p.category_l1,
                p.category_l2,
                p.brand or "",
                price,
            ]
        )
    return buf.getvalue()


def iter_lines(path) -> Iterator[str]:
    with open(path, "r", encoding="utf-8") as fh:
        yield from fh
