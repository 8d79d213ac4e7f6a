"""Command-line entry point: plan, batch, centrality, simulate, compare, validate.

Exit codes: 0 success, 1 validation error, 2 infeasible query. Errors are
emitted as a single JSON line on stderr. All outputs are deterministic for a
given set of inputs and seed (no timestamps).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

from .centrality import edge_betweenness, minmax_scale
from .errors import PmdNavError, ValidationError
from .graph import StreetGraph, load_graph, load_zones
from .router import (
    HazardWeights,
    RouteQuery,
    RouteResult,
    batch_experiment,
    plan_social_route,
)
from .scenarios import (
    Geometry,
    KINDS,
    ScenarioSpec,
    build_fig_high_crowd,
    build_fig_low_crowd,
    build_scenario,
    compare_types,
    load_world,
    run_scenario,
    scenario_metadata,
    write_trajectories_csv,
)
from .sfm import SfmConstants, TYPE_PRESETS, World


def _read(path: str) -> bytes:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"input file not found: {path}")
    return p.read_bytes()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _parse_weights(args) -> HazardWeights:
    kwargs = {}
    if args.haz is not None:
        parts = args.haz.split(",")
        if len(parts) != 3:
            raise ValidationError("--haz needs three comma-separated values")
        kwargs["haz_ring_scores"] = tuple(float(x) for x in parts)
    if args.pa is not None:
        kwargs["pa_score"] = args.pa
    if args.bc_max is not None:
        kwargs["bc_max"] = args.bc_max
    if getattr(args, "ic_max", None) is not None:
        kwargs["ic_max"] = args.ic_max
    return HazardWeights(**kwargs)


def _load_ic_csv(path: str) -> dict[str, float]:
    layer: dict[str, float] = {}
    text = _read(path).decode()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or (lineno == 1 and line.lower().startswith("edge_id")):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 'edge_id,value'")
        layer[parts[0]] = float(parts[1])
    if not layer:
        raise ValidationError(f"usage-density file {path} holds no rows")
    return layer


def _route_geojson(g: StreetGraph, result: RouteResult) -> dict:
    features = []
    for item in result.per_edge_breakdown:
        edge = g.edges[item.edge_id]
        a = g.nodes[edge.from_node].location
        b = g.nodes[edge.to_node].location
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[a.lon, a.lat], [b.lon, b.lat]],
            },
            "properties": {
                "edge_id": item.edge_id,
                "length_m": item.length_m,
                "haz_m": item.haz_m,
                "pa_m": item.pa_m,
                "bc_m": item.bc_m,
                "ic_m": item.ic_m,
                "weight_m": item.length_m + item.haz_m + item.pa_m + item.bc_m + item.ic_m,
            },
        })
    return {"type": "FeatureCollection", "features": features}


def _cmd_plan(args) -> int:
    g = load_graph(_read(args.graph))
    zones = load_zones(_read(args.zones)) if args.zones else load_zones(b'{"meso_zones":[],"micro_points":[]}')
    weights = _parse_weights(args)
    ic = _load_ic_csv(args.ic) if args.ic else None
    query = RouteQuery(args.origin, args.dest, weights, ic, args.min_side_km)
    result = plan_social_route(g, zones, query)
    out = Path(args.out)
    out.write_bytes(_json_bytes(_route_geojson(g, result)))
    stats_path = Path(args.stats_out) if args.stats_out else out.with_suffix(".stats.json")
    stats_path.write_bytes(_json_bytes({
        "origin": args.origin,
        "destination": args.dest,
        "weights": asdict(weights),
        "node_path": result.node_path,
        "length_m": result.length_m,
        "weighted_cost": result.weighted_cost,
        "shortest_length_m": result.shortest_length_m,
        "increment_pct": result.increment_pct,
    }))
    return 0


def _cmd_batch(args) -> int:
    g = load_graph(_read(args.graph))
    zones = load_zones(_read(args.zones)) if args.zones else load_zones(b'{"meso_zones":[],"micro_points":[]}')
    weights = _parse_weights(args)
    lo, _, hi = args.dist_km.partition(":")
    stats = batch_experiment(
        g, zones, args.pairs, (float(lo), float(hi or lo)), weights,
        seed=args.seed, jobs=args.jobs,
    )
    out = Path(args.out)
    out.write_bytes(_json_bytes({
        "n_pairs": stats.n_pairs,
        "seed": args.seed,
        "dist_range_km": [float(lo), float(hi or lo)],
        "weights": asdict(weights),
        "avg_shortest_m": stats.avg_shortest_m,
        "avg_new_m": stats.avg_new_m,
        "increment_pct": stats.increment_pct,
    }))
    csv_path = Path(args.csv_out) if args.csv_out else out.with_suffix(".pairs.csv")
    with csv_path.open("w") as fp:
        fp.write("index,origin,destination,gc_distance_m,shortest_m,new_m,weighted_cost,increment_pct\n")
        for r in stats.per_pair_records:
            fp.write(f"{r.index},{r.origin},{r.destination},{r.gc_distance_m!r},"
                     f"{r.shortest_m!r},{r.new_m!r},{r.weighted_cost!r},{r.increment_pct!r}\n")
    return 0


def _cmd_centrality(args) -> int:
    g = load_graph(_read(args.graph))
    raw = edge_betweenness(g, weighted=not args.hops)
    scaled = minmax_scale(raw, args.target_max)
    with Path(args.out).open("w") as fp:
        fp.write("edge_id,raw,scaled\n")
        for eid in raw:
            fp.write(f"{eid},{raw[eid]!r},{scaled[eid]!r}\n")
    return 0


def _build_world_for_kind(args) -> tuple[World, dict]:
    constants = SfmConstants(dt_s=args.dt)
    if args.kind == "fig6a":
        world = build_fig_low_crowd(constants)
        return world, {"kind": "fig6a", "constants": asdict(constants)}
    if args.kind == "fig6b":
        world = build_fig_high_crowd(constants)
        return world, {"kind": "fig6b", "constants": asdict(constants)}
    spec = ScenarioSpec(args.kind, args.type, args.seed, Geometry(), constants)
    return build_scenario(spec), {"spec": spec}


def _cmd_simulate(args) -> int:
    if bool(args.world) == bool(args.kind):
        raise ValidationError("pass exactly one of --world or --kind")
    if args.world:
        world, max_time = load_world(_read(args.world))
        if args.max_time is not None:
            max_time = args.max_time
        meta: dict = {"source": args.world, "constants": asdict(world.constants)}
        spec = None
    else:
        max_time = args.max_time if args.max_time is not None else 300.0
        world, meta = _build_world_for_kind(args)
        spec = meta.get("spec")
    result = run_scenario(world, max_time)
    with Path(args.out).open("w") as fp:
        write_trajectories_csv(result, fp)
    if spec is not None:
        meta = scenario_metadata(spec, result)
    else:
        meta.update({
            "end_time_s": result.end_time_s,
            "censored": result.censored,
            "arrived_count": result.arrived_count,
            "min_consecutive_displacement_m": result.min_consecutive_displacement_m,
            "resolvable_at_0.2m": (
                result.min_consecutive_displacement_m is not None
                and result.min_consecutive_displacement_m >= 0.2
            ),
        })
    meta["max_time_s"] = max_time
    meta_path = Path(args.meta) if args.meta else Path(args.out).with_suffix(".meta.json")
    meta_path.write_bytes(_json_bytes(_jsonable(meta)))
    if result.censored:
        print(json.dumps({"error": "CensoredError",
                          "message": f"simulation hit the {max_time} s cap"}),
              file=sys.stderr)
        return 2
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, ScenarioSpec):
        return _jsonable(asdict(obj))
    return obj


def _parse_seed_range(text: str) -> list[int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        return [int(lo)]
    return list(range(int(lo), int(hi) + 1))


def _cmd_compare(args) -> int:
    kinds = list(KINDS) if args.kind == "all" else [args.kind]
    seeds = _parse_seed_range(args.seeds)
    jobs = [(kind, seed) for kind in kinds for seed in seeds]

    def run(job):
        kind, seed = job
        spec = ScenarioSpec(kind, "type1", seed, Geometry(), SfmConstants(dt_s=args.dt))
        return compare_types(spec, args.max_time)

    if args.jobs <= 1:
        results = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, jobs))

    with Path(args.out).open("w") as fp:
        fp.write("kind,seed,pmd_type,end_time_s,censored\n")
        for r in results:
            fp.write(f"{r.kind},{r.seed},type1,{r.t1_s!r},{int(r.t1_censored)}\n")
            fp.write(f"{r.kind},{r.seed},type2,{r.t2_s!r},{int(r.t2_censored)}\n")

    summary = {}
    for kind in kinds:
        rows = [r for r in results if r.kind == kind and not (r.t1_censored or r.t2_censored)]
        censored = sum(1 for r in results if r.kind == kind) - len(rows)
        entry = {"runs": len(rows), "censored_runs": censored}
        if rows:
            m1 = statistics.median(r.t1_s for r in rows)
            m2 = statistics.median(r.t2_s for r in rows)
            entry.update({
                "median_t1_s": m1,
                "median_t2_s": m2,
                "median_ratio_t2_over_t1": m2 / m1 if m1 > 0 else None,
            })
        summary[kind] = entry
    summary_path = Path(args.summary) if args.summary else Path(args.out).with_suffix(".summary.json")
    summary_path.write_bytes(_json_bytes(summary))
    return 0


def _cmd_validate(args) -> int:
    g = load_graph(_read(args.graph))
    report = {"nodes": g.n_nodes, "edges": g.n_edges}
    if args.zones:
        zones = load_zones(_read(args.zones))
        report["meso_zones"] = len(zones.meso_zones)
        report["micro_points"] = len(zones.micro_points)
    print(json.dumps(report, sort_keys=True))
    return 0


def _add_weight_flags(p: argparse.ArgumentParser):
    p.add_argument("--haz", help="three comma-separated ring scores, inner to outer")
    p.add_argument("--pa", type=float, help="micro-point proximity score")
    p.add_argument("--bc-max", dest="bc_max", type=float, help="centrality layer ceiling")
    p.add_argument("--ic-max", dest="ic_max", type=float, help="usage-density layer ceiling")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmdnav",
        description="Socially aware PMD route planning and shared-space micro-simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan one socially weighted route")
    plan.add_argument("--graph", required=True)
    plan.add_argument("--zones")
    plan.add_argument("--from", dest="origin", required=True)
    plan.add_argument("--to", dest="dest", required=True)
    _add_weight_flags(plan)
    plan.add_argument("--ic", help="CSV edge_id,value usage-density layer")
    plan.add_argument("--min-side-km", dest="min_side_km", type=float, default=5.0)
    plan.add_argument("--out", required=True, help="route GeoJSON path")
    plan.add_argument("--stats-out", dest="stats_out")
    plan.set_defaults(func=_cmd_plan)

    batch = sub.add_parser("batch", help="seeded batch O-D experiment")
    batch.add_argument("--graph", required=True)
    batch.add_argument("--zones")
    batch.add_argument("--pairs", type=int, required=True)
    batch.add_argument("--seed", type=int, default=0)
    batch.add_argument("--dist-km", dest="dist_km", default="4.5:6.5")
    _add_weight_flags(batch)
    batch.add_argument("--jobs", type=int, default=1)
    batch.add_argument("--out", required=True, help="stats JSON path")
    batch.add_argument("--csv-out", dest="csv_out")
    batch.set_defaults(func=_cmd_batch)

    cent = sub.add_parser("centrality", help="edge betweenness CSV export")
    cent.add_argument("--graph", required=True)
    cent.add_argument("--target-max", dest="target_max", type=float, default=0.06)
    cent.add_argument("--hops", action="store_true", help="hop-count shortest paths (testing)")
    cent.add_argument("--out", required=True)
    cent.set_defaults(func=_cmd_centrality)

    sim = sub.add_parser("simulate", help="run one scenario or world file")
    sim.add_argument("--kind", choices=list(KINDS) + ["fig6a", "fig6b"])
    sim.add_argument("--world", help="scenario JSON file")
    sim.add_argument("--type", choices=list(TYPE_PRESETS), default="type1")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--dt", type=float, default=0.1)
    sim.add_argument("--max-time", dest="max_time", type=float)
    sim.add_argument("--out", required=True, help="trajectory CSV path")
    sim.add_argument("--meta", help="metadata JSON path")
    sim.set_defaults(func=_cmd_simulate)

    comp = sub.add_parser("compare", help="Type-1 vs Type-2 end-time comparison")
    comp.add_argument("--kind", choices=list(KINDS) + ["all"], default="all")
    comp.add_argument("--seeds", default="0:9", help="seed or lo:hi range")
    comp.add_argument("--dt", type=float, default=0.1)
    comp.add_argument("--max-time", dest="max_time", type=float, default=300.0)
    comp.add_argument("--jobs", type=int, default=1)
    comp.add_argument("--out", required=True, help="comparison CSV path")
    comp.add_argument("--summary", help="summary JSON path")
    comp.set_defaults(func=_cmd_compare)

    val = sub.add_parser("validate", help="ingest-only check of graph/zone files")
    val.add_argument("--graph", required=True)
    val.add_argument("--zones")
    val.set_defaults(func=_cmd_validate)
    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors / --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PmdNavError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
