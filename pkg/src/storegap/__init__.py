"""Demand-supply gap mining and candidate ranking for store placement.

The pipeline mines spatial demand from map-query logs, subtracts existing
supply, clusters the residual gap into candidate locations, and ranks the
candidates by predicted customer counts.
"""

__version__ = "0.1.0"

from .demand import (
    DemandCenter,
    DemandPoint,
    ExclusionParams,
    Target,
    find_demand_centers,
    mean_shift,
)
from .evaluate import (
    EvalReport,
    RankedList,
    leave_brand_out_eval,
    ndcg_at_k,
    nsd_at_k,
    random_baseline,
    run_pipeline,
    specific_split_eval,
)
from .features import FeatureContext, FeatureVector, feature_vector
from .geo import Disc, GeoPoint, SpatialIndex, haversine_m
from .ingest import Poi, QueryRecord, VisitTable, WifiRecord, anonymize, integrate_visits
from .learners import Dataset, ModelSpec, fit_model
from .synth import CityConfig, Hotspot, generate_city

__all__ = [
    "CityConfig",
    "Dataset",
    "DemandCenter",
    "DemandPoint",
    "Disc",
    "EvalReport",
    "ExclusionParams",
    "FeatureContext",
    "FeatureVector",
    "GeoPoint",
    "Hotspot",
    "ModelSpec",
    "Poi",
    "QueryRecord",
    "RankedList",
    "SpatialIndex",
    "Target",
    "VisitTable",
    "WifiRecord",
    "anonymize",
    "feature_vector",
    "find_demand_centers",
    "fit_model",
    "generate_city",
    "haversine_m",
    "integrate_visits",
    "leave_brand_out_eval",
    "mean_shift",
    "ndcg_at_k",
    "nsd_at_k",
    "random_baseline",
    "run_pipeline",
    "specific_split_eval",
]
