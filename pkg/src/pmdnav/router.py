"""Social-hazard edge weighting, A* search, and the batch O-D experiment harness.

The routing pipeline, per query: clip a bounding-box subnetwork around the
O-D pair, compute edge betweenness on it, min-max scale that onto
[0, bc_max], add the zone hazard layers on top of raw edge lengths scaled by
the full-graph shortest-path length, then run A* under the new weights.
"""

from __future__ import annotations

import heapq
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

from .centrality import EdgeScalarField, edge_betweenness, minmax_scale
from .errors import DisconnectedError, SamplingError, ValidationError
from .geo import haversine_m
from .graph import SharedZoneSet, StreetGraph, edge_zone_scores, subnetwork_bbox


@dataclass(frozen=True)
class HazardWeights:
    """Penalty bundle: meso ring scores (inner to outer), micro-point proximity
    score, and the min-max ceilings for the centrality and usage-density layers.
    Defaults are the calibrated operating point."""

    haz_ring_scores: tuple[float, float, float] = (0.2, 0.16, 0.12)
    pa_score: float = 0.08
    bc_max: float = 0.06
    ic_max: float = 0.06

    def __post_init__(self):
        scores = tuple(self.haz_ring_scores)
        if len(scores) != 3:
            raise ValidationError("haz_ring_scores needs exactly 3 values")
        object.__setattr__(self, "haz_ring_scores", scores)
        for name in ("pa_score", "bc_max", "ic_max"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if any(v < 0 for v in scores):
            raise ValidationError("haz_ring_scores must be >= 0")
        if not (scores[0] >= scores[1] >= scores[2]):
            raise ValidationError("haz_ring_scores must be non-increasing inner to outer")


@dataclass(frozen=True)
class RouteQuery:
    origin: str
    destination: str
    weights: HazardWeights = HazardWeights()
    ic_layer: Optional[EdgeScalarField] = None
    min_side_km: float = 5.0


class EdgeBreakdown(NamedTuple):
    edge_id: str
    length_m: float
    haz_m: float
    pa_m: float
    bc_m: float
    ic_m: float


@dataclass
class RouteResult:
    node_path: list[str]
    edge_path: list[str]
    length_m: float
    weighted_cost: float
    shortest_length_m: float
    increment_pct: float
    per_edge_breakdown: list[EdgeBreakdown]


@dataclass
class PairRecord:
    index: int
    origin: str
    destination: str
    gc_distance_m: float
    shortest_m: float
    new_m: float
    weighted_cost: float
    increment_pct: float


@dataclass
class BatchStats:
    n_pairs: int
    avg_shortest_m: float
    avg_new_m: float
    increment_pct: float
    per_pair_records: list[PairRecord] = field(default_factory=list)


def _astar(
    g: StreetGraph,
    origin: str,
    dest: str,
    edge_cost: Callable[..., float],
    use_heuristic: bool = True,
) -> tuple[list[str], list[str], float]:
    """A* over the directed graph; returns (node_path, edge_path, cost).

    The heuristic is the great-circle distance to the destination, admissible
    whenever edge costs dominate straight-line length. No closed set is kept:
    nodes may be re-expanded on improvement, so results stay exact even if the
    heuristic overshoots by float rounding. Cost ties pop the smaller node id.
    """
    if origin == dest:
        return [], [], 0.0
    d_loc = g.location(dest)
    h_cache: dict[str, float] = {}

    def h(nid: str) -> float:
        v = h_cache.get(nid)
        if v is None:
            v = haversine_m(g.location(nid), d_loc) if use_heuristic else 0.0
            h_cache[nid] = v
        return v

    best_g: dict[str, float] = {origin: 0.0}
    pred: dict[str, tuple[str, str]] = {}
    heap: list[tuple[float, str]] = [(h(origin), origin)]
    while heap:
        f0, v = heapq.heappop(heap)
        gv = best_g[v]
        if f0 > gv + h(v):
            continue  # stale entry
        if v == dest:
            nodes = [dest]
            edges = []
            cur = dest
            while cur != origin:
                prev, eid = pred[cur]
                edges.append(eid)
                nodes.append(prev)
                cur = prev
            nodes.reverse()
            edges.reverse()
            return nodes, edges, gv
        for edge in g.out_edges(v):
            w = edge.to_node
            ng = gv + edge_cost(edge)
            if ng < best_g.get(w, float("inf")):
                best_g[w] = ng
                pred[w] = (v, edge.id)
                heapq.heappush(heap, (ng + h(w), w))
    raise DisconnectedError(f"no path from {origin!r} to {dest!r}")


def shortest_path(g: StreetGraph, origin: str, dest: str) -> tuple[list[str], float]:
    """Minimal path under raw edge lengths (A* with great-circle heuristic)."""
    for nid in (origin, dest):
        if nid not in g.nodes:
            raise ValidationError(f"node {nid!r} not in graph")
    nodes, _, length = _astar(g, origin, dest, lambda e: e.length_m)
    return nodes, length


def dijkstra_cost(g: StreetGraph, origin: str, dest: str, weight_map: dict[str, float]) -> float:
    """Reference plain-Dijkstra cost under an explicit edge-weight map."""
    _, _, cost = _astar(g, origin, dest, lambda e: weight_map[e.id], use_heuristic=False)
    return cost


ZoneScoreMap = dict  # edge id -> (ring_index or None, near_micro)


def _components(
    edge, score: tuple[Optional[int], bool], bc: EdgeScalarField,
    w: HazardWeights, ic: Optional[EdgeScalarField],
) -> tuple[float, float, float, float]:
    ring, near_micro = score
    haz = w.haz_ring_scores[ring] if ring is not None else 0.0
    pa = w.pa_score if near_micro else 0.0
    return haz, pa, bc[edge.id], ic[edge.id] if ic is not None else 0.0


def assign_edge_weights(
    sub: StreetGraph,
    zones: SharedZoneSet,
    bc: EdgeScalarField,
    shortest_path_m: float,
    w: HazardWeights,
    ic: Optional[EdgeScalarField] = None,
    zone_score_map: Optional[ZoneScoreMap] = None,
) -> EdgeScalarField:
    """weight(e) = length(e) + (HAZ + PA + BC + IC) * shortest_path_m.

    ``bc`` (and ``ic`` if given) must already be scaled onto their ceilings and
    keyed exactly by the subnetwork's edges. ``zone_score_map`` is an optional
    precomputed zone classification (it covers at least the subnetwork edges).
    """
    if set(bc) != set(sub.edges):
        raise ValidationError("centrality layer keys do not match subnetwork edges")
    if ic is not None and set(ic) != set(sub.edges):
        raise ValidationError("usage-density layer keys do not match subnetwork edges")
    if not shortest_path_m > 0:
        raise ValidationError("shortest_path_m must be > 0")
    weights: EdgeScalarField = {}
    for edge in sub.edges.values():
        score = zone_score_map[edge.id] if zone_score_map is not None \
            else edge_zone_scores(edge, sub, zones)
        haz, pa, bcv, icv = _components(edge, score, bc, w, ic)
        weights[edge.id] = edge.length_m + (haz + pa + bcv + icv) * shortest_path_m
    return weights


class RouterCache:
    """Memo for the costs that repeat across queries: raw betweenness per
    bounding-box subnetwork (keyed by node set) and the zone classification of
    every edge of a graph. Thread-safe; cached values are deterministic, so
    racing duplicate computations is harmless."""

    def __init__(self):
        self._fields: dict[frozenset, EdgeScalarField] = {}
        self._zone_entries: list[tuple[StreetGraph, SharedZoneSet, ZoneScoreMap]] = []
        self._lock = threading.Lock()

    def raw_betweenness(self, sub: StreetGraph) -> EdgeScalarField:
        key = frozenset(sub.nodes)
        with self._lock:
            hit = self._fields.get(key)
        if hit is None:
            computed = edge_betweenness(sub)
            with self._lock:
                hit = self._fields.setdefault(key, computed)
        return hit

    def zone_scores(self, g: StreetGraph, zones: SharedZoneSet) -> ZoneScoreMap:
        with self._lock:
            for g2, z2, scores in self._zone_entries:
                if g2 is g and z2 is zones:
                    return scores
        scores = {e.id: edge_zone_scores(e, g, zones) for e in g.edges.values()}
        with self._lock:
            self._zone_entries.append((g, zones, scores))
        return scores


def plan_social_route(
    g: StreetGraph,
    zones: SharedZoneSet,
    q: RouteQuery,
    cache: Optional[RouterCache] = None,
) -> RouteResult:
    """Run the full socially-weighted routing pipeline for one O-D query."""
    for nid in (q.origin, q.destination):
        if nid not in g.nodes:
            raise ValidationError(f"node {nid!r} not in graph")
    if q.origin == q.destination:
        return RouteResult([], [], 0.0, 0.0, 0.0, 0.0, [])

    # the penalty scale constant comes from the full graph, not the clipped box
    _, l_sp = shortest_path(g, q.origin, q.destination)
    sub = subnetwork_bbox(g, q.origin, q.destination, q.min_side_km)

    raw_bc = cache.raw_betweenness(sub) if cache else edge_betweenness(sub)
    bc = minmax_scale(raw_bc, q.weights.bc_max)
    scores = cache.zone_scores(g, zones) if cache else None

    ic_scaled: Optional[EdgeScalarField] = None
    if q.ic_layer is not None:
        missing = [eid for eid in sub.edges if eid not in q.ic_layer]
        if missing:
            raise ValidationError(
                f"usage-density layer missing {len(missing)} subnetwork edges "
                f"(first: {missing[0]!r})"
            )
        ic_scaled = minmax_scale({eid: q.ic_layer[eid] for eid in sub.edges}, q.weights.ic_max)

    weights = assign_edge_weights(sub, zones, bc, l_sp, q.weights, ic_scaled, scores)
    nodes, edges, cost = _astar(sub, q.origin, q.destination, lambda e: weights[e.id])

    breakdown = []
    length = 0.0
    for eid in edges:
        edge = sub.edges[eid]
        score = scores[eid] if scores is not None else edge_zone_scores(edge, sub, zones)
        haz, pa, bcv, icv = _components(edge, score, bc, q.weights, ic_scaled)
        breakdown.append(
            EdgeBreakdown(eid, edge.length_m, haz * l_sp, pa * l_sp, bcv * l_sp, icv * l_sp)
        )
        length += edge.length_m
    increment = 100.0 * (length - l_sp) / l_sp
    return RouteResult(nodes, edges, length, cost, l_sp, increment, breakdown)


def sample_od_pairs(
    g: StreetGraph,
    n_pairs: int,
    dist_range_km: tuple[float, float],
    seed: int,
    min_side_km: float = 5.0,
    max_attempts: Optional[int] = None,
) -> list[tuple[str, str]]:
    """Seeded rejection sampling of node pairs whose great-circle separation
    lies in range and that are connected within their bounding box."""
    if n_pairs < 1:
        raise ValidationError(f"n_pairs must be >= 1, got {n_pairs}")
    lo_m, hi_m = dist_range_km[0] * 1000.0, dist_range_km[1] * 1000.0
    if not 0 <= lo_m <= hi_m:
        raise ValidationError(f"bad distance range {dist_range_km}")
    rng = random.Random(seed)
    ids = list(g.nodes)
    budget = max_attempts if max_attempts is not None else max(1000, 200 * n_pairs)
    pairs: list[tuple[str, str]] = []
    for _ in range(budget):
        if len(pairs) == n_pairs:
            break
        o = ids[rng.randrange(len(ids))]
        d = ids[rng.randrange(len(ids))]
        if o == d:
            continue
        gc = haversine_m(g.location(o), g.location(d))
        if not lo_m <= gc <= hi_m:
            continue
        try:
            subnetwork_bbox(g, o, d, min_side_km)
        except DisconnectedError:
            continue
        pairs.append((o, d))
    if len(pairs) < n_pairs:
        raise SamplingError(
            f"only {len(pairs)} of {n_pairs} feasible O-D pairs found "
            f"in {budget} attempts", achieved=len(pairs),
        )
    return pairs


def batch_experiment(
    g: StreetGraph,
    zones: SharedZoneSet,
    n_pairs: int,
    dist_range_km: tuple[float, float] = (4.5, 6.5),
    w: HazardWeights = HazardWeights(),
    seed: int = 0,
    ic_layer: Optional[EdgeScalarField] = None,
    min_side_km: float = 5.0,
    jobs: int = 1,
    cache: Optional[RouterCache] = None,
) -> BatchStats:
    """Route ``n_pairs`` seeded O-D pairs and aggregate the length statistics.

    The pair list is drawn serially from the seed; routing fans out over
    ``jobs`` workers but records are aggregated in pair order, so the result
    is identical for any worker count.
    """
    pairs = sample_od_pairs(g, n_pairs, dist_range_km, seed, min_side_km)
    cache = cache if cache is not None else RouterCache()

    def run(indexed: tuple[int, tuple[str, str]]) -> PairRecord:
        i, (o, d) = indexed
        q = RouteQuery(o, d, w, ic_layer, min_side_km)
        r = plan_social_route(g, zones, q, cache)
        gc = haversine_m(g.location(o), g.location(d))
        return PairRecord(i, o, d, gc, r.shortest_length_m, r.length_m, r.weighted_cost,
                          r.increment_pct)

    if jobs <= 1:
        records = [run(item) for item in enumerate(pairs)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run, enumerate(pairs)))
        records.sort(key=lambda r: r.index)

    avg_short = sum(r.shortest_m for r in records) / len(records)
    avg_new = sum(r.new_m for r in records) / len(records)
    increment = 100.0 * (avg_new - avg_short) / avg_short
    return BatchStats(len(records), avg_short, avg_new, increment, records)
