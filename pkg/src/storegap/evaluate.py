"""Ranking metrics, evaluation protocols, and the end-to-end pipeline.

Relevance of an item is its relative position in the actual ranking:
rel = (|L| - rank + 1) / |L|, so the true best item has relevance 1 and the
worst 1/|L|. nDCG@k uses these continuous relevances; nSD@k compares top-k
membership only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .demand import DemandCenter, ExclusionParams, Target, find_demand_centers
from .features import FeatureContext, FeatureVector, feature_vector
from .geo import GeoPoint
from .ingest import Poi, QueryRecord, VisitTable, WifiRecord, integrate_visits, normalize_keyword
from .learners import Dataset, FittedModel, ModelSpec, fit_model


@dataclass(frozen=True)
class RankedList:
    items: tuple
    scores: tuple | None = None

    def __post_init__(self) -> None:
        if len(set(self.items)) != len(self.items):
            raise ValueError("ranked list items must be unique")
        if self.scores is not None and len(self.scores) != len(self.items):
            raise ValueError("scores must align with items")

    def __len__(self) -> int:
        return len(self.items)

    @classmethod
    def of(cls, items, scores=None) -> RankedList:
        return cls(tuple(items), None if scores is None else tuple(scores))


def relevance(actual: RankedList, item) -> float:
    """Relative position of the item in the actual ranking: top -> 1.0."""
    try:
        rank = actual.items.index(item) + 1
    except ValueError:
        raise KeyError(f"item {item!r} not present in the actual ranking") from None
    n = len(actual)
    return (n - rank + 1) / n


def _dcg(rels: list[float]) -> float:
    return sum((2.0 ** r - 1.0) / math.log2(i + 2) for i, r in enumerate(rels))


def ndcg_at_k(
    predicted: RankedList,
    actual: RankedList,
    k: int,
    relevances: dict | None = None,
) -> float:
    """Normalized DCG of the predicted ranking's top k against the actual one.

    The ideal DCG sorts the full actual item set by descending relevance and
    truncates at k. `relevances` overrides the positional relevance (used for
    degenerate all-equal-relevance setups); by default relevance comes from
    each item's position in `actual`.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(predicted):
        raise ValueError(f"k={k} exceeds predicted list length {len(predicted)}")
    actual_set = set(actual.items)
    if not set(predicted.items) <= actual_set:
        raise ValueError("predicted items must be a subset of the actual ranking")
    if relevances is None:
        rel_of = {item: relevance(actual, item) for item in actual.items}
    else:
        rel_of = dict(relevances)
    if k > len(actual):
        raise ValueError(f"k={k} exceeds actual list length {len(actual)}")
    dcg = _dcg([rel_of[item] for item in predicted.items[:k]])
    ideal = sorted((rel_of[item] for item in actual.items), reverse=True)[:k]
    idcg = _dcg(ideal)
    if idcg == 0.0:
        return 1.0
    return dcg / idcg


def nsd_at_k(list_a: RankedList, list_b: RankedList, k: int) -> float:
    """Normalized symmetric difference of two top-k sets: (k - overlap) / k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(list_a) or k > len(list_b):
        raise ValueError(f"k={k} exceeds a list length")
    top_a = set(list_a.items[:k])
    top_b = set(list_b.items[:k])
    return (k - len(top_a & top_b)) / k


def random_baseline(
    items,
    k: int,
    metric: str = "ndcg",
    n_repeats: int = 100,
    seed: int = 0,
    relevances: dict | None = None,
) -> float:
    """Mean metric of uniformly shuffled rankings against the given actual
    order. `items` in their given order are the actual ranking."""
    if metric not in ("ndcg", "nsd"):
        raise ValueError("metric must be 'ndcg' or 'nsd'")
    actual = RankedList.of(items)
    rng = np.random.default_rng(seed)
    values = []
    arr = list(items)
    for _ in range(n_repeats):
        shuffled = [arr[i] for i in rng.permutation(len(arr))]
        predicted = RankedList.of(shuffled)
        if metric == "ndcg":
            values.append(ndcg_at_k(predicted, actual, k, relevances=relevances))
        else:
            values.append(nsd_at_k(predicted, actual, k))
    return float(np.mean(values))


@dataclass
class EvalReport:
    protocol: str
    model: str
    k: int
    n_items: int
    ndcg_at_k: float
    nsd_at_k: float
    seed: int
    repeats: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "model": self.model,
            "k": self.k,
            "n_items": self.n_items,
            "ndcg": self.ndcg_at_k,
            "nsd": self.nsd_at_k,
            "repeats": self.repeats,
            "seed": self.seed,
        }


def actual_ranking(pois: list[Poi], visits: VisitTable) -> RankedList:
    """POIs ranked by visit count descending, ties by ascending id."""
    ordered = sorted(pois, key=lambda p: (-visits.count(p.id), p.id))
    return RankedList.of([p.id for p in ordered], [float(visits.count(p.id)) for p in ordered])


def build_training_data(
    pois: list[Poi], ctx: FeatureContext, visits: VisitTable, group_ids=None
) -> Dataset:
    """Feature matrix over POIs, each row excluding the POI's own visits."""
    X = np.array([feature_vector(p.location, ctx, exclude_poi=p.id).as_array() for p in pois])
    y = np.array([float(visits.count(p.id)) for p in pois])
    return Dataset(X=X, y=y, ids=[p.id for p in pois], groups=group_ids)


def _predicted_ranking(ids: list[str], scores: np.ndarray) -> RankedList:
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return RankedList.of([ids[i] for i in order], [float(scores[i]) for i in order])


def leave_brand_out_eval(
    pois: list[Poi],
    visits: VisitTable,
    category: str,
    test_brand: str,
    model_spec: ModelSpec,
    k: int,
    ctx: FeatureContext | None = None,
) -> EvalReport:
    """Train on a category's POIs except one brand; rank that brand's stores.

    The actual ranking is by deduplicated visit counts. A baseline spec
    reports the mean of 100 shuffled rankings instead of a fitted model.
    """
    cat_pois = [p for p in pois if p.category_l1 == category]
    want = normalize_keyword(test_brand)
    test = [p for p in cat_pois if p.brand and normalize_keyword(p.brand) == want]
    test_ids = {p.id for p in test}
    train = [p for p in cat_pois if p.id not in test_ids]
    if len(test) < k:
        raise ValueError(
            f"test brand {test_brand!r} has {len(test)} POIs; k={k} requires at least k"
        )
    if ctx is None:
        ctx = _default_context(pois, visits, category)
    actual = actual_ranking(test, visits)

    if model_spec.kind == "baseline":
        ndcg = random_baseline(actual.items, k, "ndcg", n_repeats=100, seed=model_spec.seed)
        nsd = random_baseline(actual.items, k, "nsd", n_repeats=100, seed=model_spec.seed)
        return EvalReport(
            protocol=f"leave_brand_out:{category}/{test_brand}",
            model=model_spec.kind,
            k=k,
            n_items=len(test),
            ndcg_at_k=ndcg,
            nsd_at_k=nsd,
            seed=model_spec.seed,
            repeats=[{"repeat": 0, "ndcg": ndcg, "nsd": nsd}],
        )

    if not train:
        raise ValueError(f"no training POIs remain in category {category!r}")
    train_data = build_training_data(train, ctx, visits)
    assert not set(train_data.ids) & {p.id for p in test}, "train/test leakage"
    fitted = fit_model(train_data, model_spec)
    test_data = build_training_data(test, ctx, visits)
    scores = fitted.predict(test_data.X)
    predicted = _predicted_ranking(test_data.ids, scores)
    ndcg = ndcg_at_k(predicted, actual, k)
    nsd = nsd_at_k(predicted, actual, k)
    return EvalReport(
        protocol=f"leave_brand_out:{category}/{test_brand}",
        model=model_spec.kind,
        k=k,
        n_items=len(test),
        ndcg_at_k=ndcg,
        nsd_at_k=nsd,
        seed=model_spec.seed,
        repeats=[{"repeat": 0, "ndcg": ndcg, "nsd": nsd}],
    )


def specific_split_eval(
    pois: list[Poi],
    visits: VisitTable,
    brand: str,
    model_spec: ModelSpec,
    k: int,
    test_fraction: float = 0.2,
    repeats: int = 10,
    seed: int = 0,
    ctx: FeatureContext | None = None,
) -> EvalReport:
    """Repeated random split over one brand's stores: hold out test_fraction,
    train on the rest, report mean metrics with a per-repeat breakdown."""
    want = normalize_keyword(brand)
    brand_pois = sorted(
        (p for p in pois if p.brand and normalize_keyword(p.brand) == want), key=lambda p: p.id
    )
    n_test = max(1, int(round(test_fraction * len(brand_pois))))
    if n_test < k:
        raise ValueError(
            f"brand {brand!r} split keeps {n_test} test POIs; k={k} requires at least k"
        )
    if ctx is None:
        category = brand_pois[0].category_l1
        ctx = _default_context(pois, visits, category)
    per_repeat = []
    for rep in range(repeats):
        rng = np.random.default_rng([seed, rep])
        idx = rng.permutation(len(brand_pois))
        test = [brand_pois[i] for i in sorted(idx[:n_test])]
        train = [brand_pois[i] for i in sorted(idx[n_test:])]
        actual = actual_ranking(test, visits)
        if model_spec.kind == "baseline":
            ndcg = random_baseline(actual.items, k, "ndcg", n_repeats=100, seed=model_spec.seed + rep)
            nsd = random_baseline(actual.items, k, "nsd", n_repeats=100, seed=model_spec.seed + rep)
        else:
            train_data = build_training_data(train, ctx, visits)
            fitted = fit_model(train_data, model_spec)
            test_data = build_training_data(test, ctx, visits)
            scores = fitted.predict(test_data.X)
            predicted = _predicted_ranking(test_data.ids, scores)
            ndcg = ndcg_at_k(predicted, actual, k)
            nsd = nsd_at_k(predicted, actual, k)
        per_repeat.append({"repeat": rep, "ndcg": ndcg, "nsd": nsd})
    return EvalReport(
        protocol=f"specific_split:{brand}",
        model=model_spec.kind,
        k=k,
        n_items=len(brand_pois),
        ndcg_at_k=float(np.mean([r["ndcg"] for r in per_repeat])),
        nsd_at_k=float(np.mean([r["nsd"] for r in per_repeat])),
        seed=seed,
        repeats=per_repeat,
    )


def _default_context(pois: list[Poi], visits: VisitTable, category: str) -> FeatureContext:
    lats = [p.location.lat for p in pois]
    lngs = [p.location.lng for p in pois]
    center = GeoPoint((min(lats) + max(lats)) / 2.0, (min(lngs) + max(lngs)) / 2.0)
    return FeatureContext.build(pois=pois, visits=visits, city_center=center, target_category=category)


@dataclass
class RankedCenter:
    center: DemandCenter
    predicted_customers: float
    features: FeatureVector
    rank: int


@dataclass
class PipelineResult:
    status: str
    centers: list[RankedCenter]
    target: Target
    model_kind: str

    def to_rows(self) -> list[dict]:
        return [
            {
                "center": {"lat": rc.center.location.lat, "lng": rc.center.location.lng},
                "predicted_customers": rc.predicted_customers,
                "features": rc.features.as_dict(),
                "rank": rc.rank,
            }
            for rc in self.centers
        ]


def run_pipeline(
    queries: list[QueryRecord],
    pois: list[Poi],
    wifi: list[WifiRecord],
    target: Target,
    params: ExclusionParams,
    model_spec: ModelSpec,
    k: int | None = None,
    alias_table: dict[str, str] | None = None,
    city_center: GeoPoint | None = None,
    seed: int = 0,
    fallback_threshold_m: float = 1000.0,
    model: FittedModel | None = None,
    ctx: FeatureContext | None = None,
    tz_offset_hours: int = 8,
) -> PipelineResult:
    """Mine demand centers, featurize them, train on existing same-category
    stores, and rank the candidates by predicted customer count.

    Ties in predicted score break by descending member_count then ascending
    (lat, lng). A pre-fitted model skips training; a pre-built FeatureContext
    skips context assembly.
    """
    visits = integrate_visits(wifi, pois, tz_offset_hours) if ctx is None else ctx.visits
    centers = find_demand_centers(
        queries,
        pois,
        target,
        params,
        alias_table=alias_table,
        fallback_threshold_m=fallback_threshold_m,
        rng_seed=seed,
        tz_offset_hours=tz_offset_hours,
    )
    if not centers:
        return PipelineResult(status="no-gap", centers=[], target=target, model_kind=model_spec.kind)

    category = _training_category(pois, target)
    if ctx is None:
        if city_center is None:
            lats = [p.location.lat for p in pois]
            lngs = [p.location.lng for p in pois]
            city_center = GeoPoint((min(lats) + max(lats)) / 2.0, (min(lngs) + max(lngs)) / 2.0)
        ctx = FeatureContext.build(
            pois=pois, visits=visits, city_center=city_center, target_category=category
        )

    if model is None:
        train_pois = [p for p in pois if p.category_l1 == category]
        if not train_pois:
            return PipelineResult(status="no-training-data", centers=[], target=target, model_kind=model_spec.kind)
        train_data = build_training_data(train_pois, ctx, visits)
        model = fit_model(train_data, model_spec)

    fvs = [feature_vector(c.location, ctx) for c in centers]
    X = np.array([fv.as_array() for fv in fvs])
    scores = model.predict(X)
    order = sorted(
        range(len(centers)),
        key=lambda i: (
            -scores[i],
            -centers[i].member_count,
            centers[i].location.lat,
            centers[i].location.lng,
        ),
    )
    ranked = [
        RankedCenter(
            center=centers[i],
            predicted_customers=float(scores[i]),
            features=fvs[i],
            rank=rank + 1,
        )
        for rank, i in enumerate(order)
    ]
    if k is not None:
        ranked = ranked[:k]
    return PipelineResult(status="ok", centers=ranked, target=target, model_kind=model_spec.kind)


def _training_category(pois: list[Poi], target: Target) -> str:
    if target.kind == "category":
        return target.name
    want = normalize_keyword(target.name)
    counts: dict[str, int] = {}
    for p in pois:
        if p.brand and normalize_keyword(p.brand) == want:
            counts[p.category_l1] = counts.get(p.category_l1, 0) + 1
    if not counts:
        return target.name
    return max(sorted(counts), key=lambda c: counts[c])
