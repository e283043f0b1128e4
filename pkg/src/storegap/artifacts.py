"""Canonical artifact rendering shared by the CLI and the HTTP service.

Both surfaces must emit byte-identical documents for identical inputs, so
every output format is rendered here and nowhere else.
"""

from __future__ import annotations

import json
import os
import tempfile

from .demand import DemandCenter, TemporalProfile
from .evaluate import EvalReport, PipelineResult


def render_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def demand_centers_doc(centers: list[DemandCenter]) -> list[dict]:
    return [
        {
            "lat": c.location.lat,
            "lng": c.location.lng,
            "member_count": c.member_count,
            "weight": c.weight,
        }
        for c in centers
    ]


def render_demand_centers(centers: list[DemandCenter]) -> str:
    return render_json(demand_centers_doc(centers))


def temporal_profile_doc(profile: TemporalProfile) -> dict:
    return {
        "hour_hist": profile.hour_hist,
        "weekday_hist": profile.weekday_hist,
        "sd_distance_cdf": [[d, f] for d, f in profile.sd_distance_cdf],
    }


def render_ranking(result: PipelineResult) -> str:
    return render_json(result.to_rows())


def render_eval_report(report: EvalReport) -> str:
    return render_json(report.to_dict())


def render_importance(names: list[str], weights) -> str:
    return render_json({"importance": {n: float(w) for n, w in zip(names, weights)}})


def heatmap_doc(cells: list[tuple[float, float, int]]) -> list[dict]:
    return [{"lat": lat, "lng": lng, "demand_count": count} for lat, lng, count in cells]


def write_atomic(path: str, content: str) -> None:
    """Write via a temp file plus rename so partial files never appear."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
