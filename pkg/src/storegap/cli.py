"""Batch entry point: synthesize data, mine demand, evaluate, rank, serve.

Exit codes: 0 success (including empty results), 2 usage/config error,
3 data error. All outputs are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .artifacts import (
    render_demand_centers,
    render_eval_report,
    render_importance,
    render_json,
    render_ranking,
    temporal_profile_doc,
    write_atomic,
)
from .config import ConfigError, RunConfig, load_city_config, load_run_config
from .demand import extract_demand, find_demand_centers, route_od_pairs, temporal_profile
from .evaluate import leave_brand_out_eval, run_pipeline, specific_split_eval
from .features import FEATURE_NAMES
from .ingest import (
    integrate_visits,
    iter_lines,
    parse_pois,
    parse_queries,
    parse_wifi,
    pois_to_csv,
    queries_to_jsonl,
    wifi_to_jsonl,
)
from .learners import feature_importance, fit_model, model_from_json, model_to_json
from .synth import generate_city

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


class DataError(Exception):
    """Unreadable or unusable input data; maps to exit code 3."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storegap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="worker cap")
        p.add_argument("--out", default=None, help="output directory")

    p_synth = sub.add_parser("synth", help="generate a synthetic city with ground truth")
    common(p_synth)

    p_demand = sub.add_parser("demand", help="mine demand centers")
    common(p_demand)

    p_eval = sub.add_parser("eval", help="run an evaluation protocol")
    common(p_eval)
    p_eval.add_argument("--protocol", choices=["leave_brand_out", "specific_split"], default=None)

    p_rank = sub.add_parser("rank", help="run the full pipeline and rank candidates")
    common(p_rank)
    p_rank.add_argument("--model", default=None, help="pre-fitted model.json (skips training)")
    p_rank.add_argument("--save-model", action="store_true", help="also write model.json")

    p_imp = sub.add_parser("importance", help="random-forest feature importance")
    common(p_imp)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    common(p_serve)
    p_serve.add_argument("--port", type=int, default=None)

    return parser


def _load_datasets(cfg: RunConfig):
    for path in (cfg.queries_path, cfg.pois_path, cfg.wifi_path):
        if not Path(path).exists():
            raise DataError(f"missing data file: {path}")
    try:
        queries = parse_queries(iter_lines(cfg.queries_path))
        pois = parse_pois(iter_lines(cfg.pois_path))
        wifi = parse_wifi(iter_lines(cfg.wifi_path))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not pois.records:
        raise DataError(f"no usable POIs in {cfg.pois_path}")
    return queries.records, pois.records, wifi.records


def cmd_synth(args) -> int:
    cfg = load_city_config(args.config, seed_override=args.seed)
    out = Path(args.out or "city")
    try:
        queries, pois, wifi, manifest = generate_city(cfg)
    except ValueError as exc:
        raise ConfigError(f"infeasible city config: {exc}") from exc
    write_atomic(str(out / "queries.jsonl"), queries_to_jsonl(queries))
    write_atomic(str(out / "pois.csv"), pois_to_csv(pois))
    write_atomic(str(out / "wifi.jsonl"), wifi_to_jsonl(wifi))
    write_atomic(str(out / "manifest.json"), manifest.to_json() + "\n")
    print(f"wrote {len(queries)} queries, {len(pois)} pois, {len(wifi)} wifi records to {out}/")
    return EXIT_OK


def cmd_demand(args) -> int:
    cfg = load_run_config(args.config, vars(args))
    queries, pois, wifi = _load_datasets(cfg)
    centers = find_demand_centers(
        queries,
        pois,
        cfg.target,
        cfg.params,
        alias_table=cfg.aliases,
        fallback_threshold_m=cfg.fallback_threshold_m,
        rng_seed=cfg.seed,
        tz_offset_hours=cfg.tz_offset_hours,
    )
    points = extract_demand(queries, pois, cfg.target, cfg.aliases)
    if cfg.target.kind == "brand":
        pairs = route_od_pairs(queries, pois, brand=cfg.target.name)
    else:
        pairs = route_od_pairs(queries, pois, category=cfg.target.name)
    profile = temporal_profile(points, pairs, cfg.tz_offset_hours)
    write_atomic(str(cfg.out_dir / "demand_centers.json"), render_demand_centers(centers))
    write_atomic(str(cfg.out_dir / "temporal_profile.json"), render_json(temporal_profile_doc(profile)))
    if centers:
        print(f"found {len(centers)} demand centers")
    else:
        print("status: no-gap (no demand centers survive exclusion)")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_run_config(args.config, vars(args))
    if args.protocol:
        cfg.eval_protocol = args.protocol
    queries, pois, wifi = _load_datasets(cfg)
    visits = integrate_visits(wifi, pois, cfg.tz_offset_hours)
    k = cfg.eval_k if cfg.eval_k is not None else cfg.k
    try:
        if cfg.eval_protocol == "leave_brand_out":
            category = cfg.eval_category or (
                cfg.target.name if cfg.target.kind == "category" else None
            )
            if not category or not cfg.eval_test_brand:
                raise ConfigError("leave_brand_out needs eval.category and eval.test_brand")
            print(f"training on {category!r} excluding brand {cfg.eval_test_brand!r}")
            report = leave_brand_out_eval(
                pois, visits, category, cfg.eval_test_brand, cfg.model_spec, k
            )
        else:
            brand = cfg.eval_test_brand or (cfg.target.name if cfg.target.kind == "brand" else None)
            if not brand:
                raise ConfigError("specific_split needs eval.test_brand or a brand target")
            report = specific_split_eval(
                pois,
                visits,
                brand,
                cfg.model_spec,
                k,
                test_fraction=cfg.eval_test_fraction,
                repeats=cfg.eval_repeats,
                seed=cfg.seed,
            )
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    write_atomic(str(cfg.out_dir / "eval_report.json"), render_eval_report(report))
    print(f"{report.protocol}: nDCG@{report.k}={report.ndcg_at_k:.4f} nSD@{report.k}={report.nsd_at_k:.4f}")
    return EXIT_OK


def cmd_rank(args) -> int:
    cfg = load_run_config(args.config, vars(args))
    queries, pois, wifi = _load_datasets(cfg)
    model = None
    if args.model:
        try:
            model = model_from_json(Path(args.model).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"model file not found: {args.model}") from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"malformed model file {args.model}: {exc}") from exc
    result = run_pipeline(
        queries,
        pois,
        wifi,
        cfg.target,
        cfg.params,
        cfg.model_spec,
        k=cfg.k,
        alias_table=cfg.aliases,
        city_center=cfg.city_center,
        seed=cfg.seed,
        fallback_threshold_m=cfg.fallback_threshold_m,
        model=model,
        tz_offset_hours=cfg.tz_offset_hours,
    )
    write_atomic(str(cfg.out_dir / "ranking.json"), render_ranking(result))

    from .evaluate import _default_context, _training_category, build_training_data
    from .features import features_csv, feature_vector

    visits = integrate_visits(wifi, pois, cfg.tz_offset_hours)
    category = _training_category(pois, cfg.target)
    ctx = _default_context(pois, visits, category)
    train = [p for p in pois if p.category_l1 == category]
    rows = [
        (p.id, feature_vector(p.location, ctx, exclude_poi=p.id), float(visits.count(p.id)))
        for p in train
    ]
    rows.extend(
        (f"center-{rc.rank:03d}", rc.features, None) for rc in result.centers
    )
    write_atomic(str(cfg.out_dir / "features.csv"), features_csv(rows))

    if args.save_model and model is None and result.status == "ok" and train:
        fitted = fit_model(build_training_data(train, ctx, visits), cfg.model_spec)
        write_atomic(str(cfg.out_dir / "model.json"), model_to_json(fitted) + "\n")
    print(f"status: {result.status}; ranked {len(result.centers)} candidates")
    return EXIT_OK


def cmd_importance(args) -> int:
    cfg = load_run_config(args.config, vars(args))
    queries, pois, wifi = _load_datasets(cfg)
    visits = integrate_visits(wifi, pois, cfg.tz_offset_hours)
    from .evaluate import _default_context, _training_category, build_training_data
    from .learners import ModelSpec

    category = _training_category(pois, cfg.target)
    train = [p for p in pois if p.category_l1 == category]
    if not train:
        raise DataError(f"no POIs in category {category!r}")
    ctx = _default_context(pois, visits, category)
    spec = cfg.model_spec if cfg.model_spec.kind == "rf" else ModelSpec(kind="rf", seed=cfg.seed)
    fitted = fit_model(build_training_data(train, ctx, visits), spec)
    weights = feature_importance(fitted)
    write_atomic(str(cfg.out_dir / "importance.json"), render_importance(list(FEATURE_NAMES), weights))
    print("importance:", {n: round(float(w), 4) for n, w in zip(FEATURE_NAMES, weights)})
    return EXIT_OK


def cmd_serve(args) -> int:
    import errno

    import uvicorn

    from .service import SessionState, create_app

    cfg = load_run_config(args.config, vars(args))
    if args.port is not None:
        cfg.port = args.port
    try:
        state = SessionState.from_run_config(cfg)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    app = create_app(state)
    try:
        uvicorn.run(app, host="127.0.0.1", port=cfg.port, log_level="warning")
    except SystemExit as exc:  # uvicorn wraps startup failures
        if exc.code not in (0, None):
            print(f"error: service failed to start on port {cfg.port}", file=sys.stderr)
            return EXIT_CONFIG
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            print(f"error: port {cfg.port} already in use", file=sys.stderr)
            return EXIT_CONFIG
        raise
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "demand": cmd_demand,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "importance": cmd_importance,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
