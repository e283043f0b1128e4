"""HTTP/JSON facade over the pipeline for the analyst UI and scripts.

Every response body that has a CLI artifact twin is rendered through
storegap.artifacts, so the two surfaces stay byte-identical for identical
inputs and seeds.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import Future, ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field, replace

from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .artifacts import heatmap_doc, render_demand_centers, render_json, render_ranking
from .config import RunConfig
from .demand import ExclusionParams, Target, bucket_points, extract_demand, find_demand_centers
from .evaluate import run_pipeline
from .features import FeatureContext, feature_vector
from .geo import GeoPoint
from .ingest import (
    DEFAULT_TZ_OFFSET_HOURS,
    Poi,
    QueryRecord,
    WifiRecord,
    integrate_visits,
    iter_lines,
    normalize_keyword,
    parse_pois,
    parse_queries,
    parse_wifi,
)
from .learners import FittedModel, ModelSpec, fit_model

JOB_SYNC_WAIT_S = 2.0
MIN_HEATMAP_CELL_M = 50.0


def _json_response(body: str, status_code: int = 200) -> Response:
    return Response(content=body, status_code=status_code, media_type="application/json")


def _error(status_code: int, detail: str) -> Response:
    return _json_response(render_json({"detail": detail}), status_code)


@dataclass
class SessionState:
    queries: list[QueryRecord]
    pois: list[Poi]
    wifi: list[WifiRecord]
    aliases: dict[str, str]
    default_spec: ModelSpec
    params: ExclusionParams = field(default_factory=ExclusionParams)
    seed: int = 0
    k: int = 10
    city_center: GeoPoint | None = None
    fallback_threshold_m: float = 1000.0
    tz_offset_hours: int = DEFAULT_TZ_OFFSET_HOURS
    threads: int = 4
    sync_wait_s: float = JOB_SYNC_WAIT_S

    def __post_init__(self) -> None:
        self.visits = integrate_visits(self.wifi, self.pois, self.tz_offset_hours)
        if self.city_center is None and self.pois:
            lats = [p.location.lat for p in self.pois]
            lngs = [p.location.lng for p in self.pois]
            self.city_center = GeoPoint((min(lats) + max(lats)) / 2.0, (min(lngs) + max(lngs)) / 2.0)
        self._ctx_cache: dict[str, FeatureContext] = {}
        self._model_cache: dict[str, Future] = {}
        self._jobs: dict[str, Future] = {}
        self._lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=max(1, self.threads))
        self._categories = sorted({p.category_l1 for p in self.pois})
        self._brands = {normalize_keyword(p.brand) for p in self.pois if p.brand}

    @classmethod
    def from_run_config(cls, cfg: RunConfig) -> SessionState:
        queries = parse_queries(iter_lines(cfg.queries_path)).records
        pois = parse_pois(iter_lines(cfg.pois_path)).records
        wifi = parse_wifi(iter_lines(cfg.wifi_path)).records
        return cls(
            queries=queries,
            pois=pois,
            wifi=wifi,
            aliases=cfg.aliases,
            default_spec=cfg.model_spec,
            params=cfg.params,
            seed=cfg.seed,
            k=cfg.k,
            city_center=cfg.city_center,
            fallback_threshold_m=cfg.fallback_threshold_m,
            tz_offset_hours=cfg.tz_offset_hours,
            threads=cfg.threads,
        )

    # -- target / cache helpers --

    def knows_target(self, target: Target) -> bool:
        if target.kind == "brand":
            return normalize_keyword(target.name) in self._brands
        return target.name in self._categories or target.name in set(self.aliases.values())

    def training_category(self, target: Target) -> str:
        if target.kind == "category":
            return target.name
        want = normalize_keyword(target.name)
        counts: dict[str, int] = {}
        for p in self.pois:
            if p.brand and normalize_keyword(p.brand) == want:
                counts[p.category_l1] = counts.get(p.category_l1, 0) + 1
        if not counts:
            return target.name
        return max(sorted(counts), key=lambda c: counts[c])

    def context_for(self, category: str) -> FeatureContext:
        with self._lock:
            ctx = self._ctx_cache.get(category)
        if ctx is not None:
            return ctx
        ctx = FeatureContext.build(
            pois=self.pois,
            visits=self.visits,
            city_center=self.city_center,
            target_category=category,
        )
        with self._lock:
            return self._ctx_cache.setdefault(category, ctx)

    def model_for(self, target: Target, spec: ModelSpec) -> FittedModel:
        """Fitted model for (training category, spec); at most one fit per key
        even under concurrent requests."""
        category = self.training_category(target)
        key = json.dumps({"category": category, "spec": spec.to_dict()}, sort_keys=True)
        with self._lock:
            future = self._model_cache.get(key)
            if future is None:
                future = self._executor.submit(self._fit, category, spec)
                self._model_cache[key] = future
        return future.result()

    def _fit(self, category: str, spec: ModelSpec) -> FittedModel:
        from .evaluate import build_training_data

        ctx = self.context_for(category)
        train_pois = [p for p in self.pois if p.category_l1 == category]
        if not train_pois:
            raise LookupError(f"no POIs in category {category!r} to train on")
        data = build_training_data(train_pois, ctx, self.visits)
        return fit_model(data, spec)

    def clear_caches(self) -> None:
        with self._lock:
            self._ctx_cache.clear()
            self._model_cache.clear()

    def submit_job(self, fn) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = self._executor.submit(fn)
        return job_id

    def job(self, job_id: str) -> Future | None:
        with self._lock:
            return self._jobs.get(job_id)


def _parse_target(doc: dict) -> Target:
    raw = doc.get("target")
    if isinstance(raw, dict):
        return Target(kind=str(raw.get("kind", "category")), name=str(raw.get("name", "")))
    raise ValueError("body must carry target: {kind, name}")


def create_app(state: SessionState) -> FastAPI:
    app = FastAPI(title="storegap", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.session = state

    @app.get("/api/health")
    def health() -> Response:
        return _json_response(
            render_json(
                {
                    "status": "ok",
                    "version": __version__,
                    "n_pois": len(state.pois),
                    "n_queries": len(state.queries),
                }
            )
        )

    @app.get("/api/categories")
    def categories() -> Response:
        rows = []
        by_cat: dict[str, list[Poi]] = {}
        for p in state.pois:
            by_cat.setdefault(p.category_l1, []).append(p)
        for cat in sorted(by_cat):
            brands = sorted({p.brand for p in by_cat[cat] if p.brand})
            rows.append({"category": cat, "poi_count": len(by_cat[cat]), "brands": brands})
        return _json_response(render_json(rows))

    @app.post("/api/demand-centers")
    def demand_centers(body: dict) -> Response:
        try:
            target = _parse_target(body)
        except ValueError as exc:
            return _error(422, str(exc))
        if not state.knows_target(target):
            return _error(404, f"unknown target {target.kind}:{target.name}")
        try:
            params = replace(state.params, **body.get("params", {}))
        except (TypeError, ValueError) as exc:
            return _error(422, f"invalid params: {exc}")
        seed = int(body.get("seed", state.seed))
        centers = find_demand_centers(
            state.queries,
            state.pois,
            target,
            params,
            alias_table=state.aliases,
            fallback_threshold_m=state.fallback_threshold_m,
            rng_seed=seed,
            tz_offset_hours=state.tz_offset_hours,
        )
        return _json_response(render_demand_centers(centers))

    @app.post("/api/rank")
    def rank(body: dict) -> Response:
        try:
            target = _parse_target(body)
        except ValueError as exc:
            return _error(422, str(exc))
        if not state.knows_target(target):
            return _error(404, f"unknown target {target.kind}:{target.name}")
        try:
            spec_doc = {**state.default_spec.to_dict(), **body.get("model_spec", {})}
            spec = ModelSpec.from_dict(spec_doc)
            params = replace(state.params, **body.get("params", {}))
        except (TypeError, ValueError) as exc:
            return _error(422, f"invalid spec: {exc}")
        seed = int(body.get("seed", state.seed))
        k = body.get("k", state.k)
        k = int(k) if k is not None else None

        def work() -> str:
            category = state.training_category(target)
            ctx = state.context_for(category)
            model = state.model_for(target, spec)
            result = run_pipeline(
                state.queries,
                state.pois,
                state.wifi,
                target,
                params,
                spec,
                k=k,
                alias_table=state.aliases,
                seed=seed,
                fallback_threshold_m=state.fallback_threshold_m,
                model=model,
                ctx=ctx,
                tz_offset_hours=state.tz_offset_hours,
            )
            if result.status != "ok":
                raise _EmptyDemand(result.status)
            return render_ranking(result)

        job_id = state.submit_job(work)
        future = state.job(job_id)
        try:
            return _json_response(future.result(timeout=state.sync_wait_s))
        except _EmptyDemand as exc:
            return _error(409, f"no candidates to rank: {exc}")
        except FutureTimeout:
            return _json_response(render_json({"job_id": job_id, "status": "running"}), 202)

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str) -> Response:
        future = state.job(job_id)
        if future is None:
            return _error(404, f"unknown job {job_id}")
        if not future.done():
            return _json_response(render_json({"job_id": job_id, "status": "running"}), 202)
        try:
            return _json_response(future.result())
        except _EmptyDemand as exc:
            return _error(409, f"no candidates to rank: {exc}")
        except Exception as exc:  # noqa: BLE001 - job errors surface as 500
            return _error(500, str(exc))

    @app.get("/api/analyze")
    def analyze(lat: str, lng: str, target: str, kind: str = "category") -> Response:
        try:
            point = GeoPoint(float(lat), float(lng))
        except (TypeError, ValueError) as exc:
            return _error(400, f"malformed coordinates: {exc}")
        try:
            tgt = Target(kind=kind, name=target)
        except ValueError as exc:
            return _error(400, str(exc))
        if not state.knows_target(tgt):
            return _error(404, f"unknown target {tgt.kind}:{tgt.name}")
        category = state.training_category(tgt)
        ctx = state.context_for(category)
        model = state.model_for(tgt, state.default_spec)
        # What-if exactly on an existing POI means "evaluate this site": drop
        # that POI's own visits, matching the offline feature rows.
        exclude = None
        nearest = ctx.poi_index.k_nearest(point, 1, 1.0)
        if nearest:
            exclude = nearest[0][0]
        fv = feature_vector(point, ctx, exclude_poi=exclude)
        prediction = float(model.predict(fv.as_array().reshape(1, -1))[0])
        return _json_response(
            render_json(
                {
                    "lat": point.lat,
                    "lng": point.lng,
                    "target": tgt.name,
                    "features": fv.as_dict(),
                    "predicted_customers": prediction,
                }
            )
        )

    @app.get("/api/heatmap")
    def heatmap(target: str, cell_m: float = 500.0, kind: str = "category") -> Response:
        if cell_m < MIN_HEATMAP_CELL_M:
            return _error(422, f"cell_m must be >= {MIN_HEATMAP_CELL_M}")
        try:
            tgt = Target(kind=kind, name=target)
        except ValueError as exc:
            return _error(400, str(exc))
        if not state.knows_target(tgt):
            return _error(404, f"unknown target {tgt.kind}:{tgt.name}")
        points = extract_demand(state.queries, state.pois, tgt, state.aliases)
        cells = bucket_points(points, cell_m, state.city_center) if points else []
        return _json_response(render_json(heatmap_doc(cells)))

    @app.delete("/api/cache")
    def clear_cache() -> Response:
        state.clear_caches()
        return _json_response(render_json({"cleared": True}))

    return app


class _EmptyDemand(Exception):
    pass
