"""Street graph and shared-space zone model: ingestion, validation, queries.

Graphs are directed and immutable after load. An undirected source document is
expanded into two directed edges per link at load time (reverse ids get a
``::rev`` suffix).
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DisconnectedError, ValidationError
from .geo import GeoPoint, METERS_PER_DEG_LAT, haversine_m, meters_per_deg_lon

DEFAULT_RING_RADII_M = (100.0, 200.0, 300.0)
DEFAULT_PA_RADIUS_M = 100.0


@dataclass(frozen=True)
class Node:
    id: str
    location: GeoPoint


@dataclass(frozen=True)
class Edge:
    id: str
    from_node: str
    to_node: str
    length_m: float


@dataclass(frozen=True)
class SharedZoneSet:
    """Meso zone centers and micro-unavailability points. Both lists may be empty."""

    meso_zones: tuple[GeoPoint, ...] = ()
    micro_points: tuple[GeoPoint, ...] = ()


class StreetGraph:
    """Directed geocoded graph with an adjacency index from node id to outgoing edges."""

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge]):
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValidationError(f"duplicate node id {node.id!r}")
            self.nodes[node.id] = node
        for edge in edges:
            if edge.id in self.edges:
                raise ValidationError(f"duplicate edge id {edge.id!r}")
            if edge.from_node not in self.nodes:
                raise ValidationError(f"edge {edge.id!r} references missing node {edge.from_node!r}")
            if edge.to_node not in self.nodes:
                raise ValidationError(f"edge {edge.id!r} references missing node {edge.to_node!r}")
            if edge.from_node == edge.to_node:
                raise ValidationError(f"edge {edge.id!r} is a self-loop")
            if not (edge.length_m > 0.0) or not math.isfinite(edge.length_m):
                raise ValidationError(f"edge {edge.id!r} has non-positive length {edge.length_m}")
            self.edges[edge.id] = edge
        self._out: dict[str, tuple[Edge, ...]] = self._build_adjacency()

    def _build_adjacency(self) -> dict[str, tuple[Edge, ...]]:
        out: dict[str, list[Edge]] = {nid: [] for nid in self.nodes}
        for edge in self.edges.values():
            out[edge.from_node].append(edge)
        return {nid: tuple(es) for nid, es in out.items()}

    def out_edges(self, node_id: str) -> tuple[Edge, ...]:
        return self._out[node_id]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def location(self, node_id: str) -> GeoPoint:
        return self.nodes[node_id].location

    def edge_midpoint(self, edge: Edge) -> GeoPoint:
        a = self.nodes[edge.from_node].location
        b = self.nodes[edge.to_node].location
        return GeoPoint((a.lat + b.lat) / 2.0, (a.lon + b.lon) / 2.0)


def _require(cond: bool, message: str):
    if not cond:
        raise ValidationError(message)


def _parse_latlon(obj: dict, what: str) -> GeoPoint:
    _require(isinstance(obj, dict), f"{what} must be an object")
    for key in ("lat", "lon"):
        _require(key in obj, f"{what} missing {key!r}")
        _require(isinstance(obj[key], (int, float)), f"{what} field {key!r} must be a number")
    return GeoPoint(float(obj["lat"]), float(obj["lon"]))


def load_graph(graph_document: bytes | str) -> StreetGraph:
    """Parse and validate the JSON graph format; build the adjacency index.

    ``{"nodes":[{"id","lat","lon"}...], "edges":[{"id","from","to","length_m"}...],
    "directed": bool}``. With ``directed: false`` every edge is expanded into a
    forward and a ``::rev`` reverse directed edge.
    """
    try:
        doc = json.loads(graph_document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed graph document: {exc}") from exc
    _require(isinstance(doc, dict), "graph document must be a JSON object")
    for key in ("nodes", "edges"):
        _require(key in doc and isinstance(doc[key], list), f"graph document missing {key!r} list")
    directed = doc.get("directed", True)
    _require(isinstance(directed, bool), "'directed' must be a boolean")

    nodes = []
    for raw in doc["nodes"]:
        _require(isinstance(raw, dict) and "id" in raw, "node entries need an 'id'")
        nodes.append(Node(str(raw["id"]), _parse_latlon(raw, f"node {raw['id']!r}")))

    edges = []
    for raw in doc["edges"]:
        _require(isinstance(raw, dict), "edge entries must be objects")
        for key in ("id", "from", "to", "length_m"):
            _require(key in raw, f"edge entry missing {key!r}: {raw}")
        eid = str(raw["id"])
        _require(isinstance(raw["length_m"], (int, float)), f"edge {eid!r} length_m must be a number")
        edges.append(Edge(eid, str(raw["from"]), str(raw["to"]), float(raw["length_m"])))
        if not directed:
            edges.append(Edge(eid + "::rev", str(raw["to"]), str(raw["from"]), float(raw["length_m"])))

    return StreetGraph(nodes, edges)


def dump_graph(g: StreetGraph) -> bytes:
    """Serialize to the JSON graph format (always directed). Deterministic bytes."""
    doc = {
        "nodes": [{"id": n.id, "lat": n.location.lat, "lon": n.location.lon} for n in g.nodes.values()],
        "edges": [
            {"id": e.id, "from": e.from_node, "to": e.to_node, "length_m": e.length_m}
            for e in g.edges.values()
        ],
        "directed": True,
    }
    return json.dumps(doc, separators=(",", ":")).encode()


def load_zones(zone_document: bytes | str) -> SharedZoneSet:
    """Parse the JSON zone format: ``{"meso_zones":[{lat,lon}...], "micro_points":[...]}``."""
    try:
        doc = json.loads(zone_document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed zone document: {exc}") from exc
    _require(isinstance(doc, dict), "zone document must be a JSON object")
    for key in ("meso_zones", "micro_points"):
        _require(isinstance(doc.get(key, []), list), f"{key!r} must be a list")
    meso = tuple(_parse_latlon(z, "meso zone") for z in doc.get("meso_zones", []))
    micro = tuple(_parse_latlon(z, "micro point") for z in doc.get("micro_points", []))
    return SharedZoneSet(meso, micro)


def dump_zones(zones: SharedZoneSet) -> bytes:
    doc = {
        "meso_zones": [{"lat": p.lat, "lon": p.lon} for p in zones.meso_zones],
        "micro_points": [{"lat": p.lat, "lon": p.lon} for p in zones.micro_points],
    }
    return json.dumps(doc, separators=(",", ":")).encode()


def subnetwork_bbox(
    g: StreetGraph, origin: str, dest: str, min_side_km: float = 5.0
) -> StreetGraph:
    """Induced subgraph inside an axis-aligned lat/lon square around the O-D pair.

    The square is centered at the O-D midpoint with side
    ``max(min_side_km, O-D great-circle distance + 1 km)``, so pairs farther
    apart than the minimum side remain coverable. Origin and destination are
    always included. Raises DisconnectedError when the destination is not
    reachable from the origin inside the box.
    """
    if not min_side_km > 0:
        raise ValidationError(f"min_side_km must be > 0, got {min_side_km}")
    for nid in (origin, dest):
        if nid not in g.nodes:
            raise ValidationError(f"node {nid!r} not in graph")
    o_loc = g.location(origin)
    d_loc = g.location(dest)
    mid_lat = (o_loc.lat + d_loc.lat) / 2.0
    mid_lon = (o_loc.lon + d_loc.lon) / 2.0
    side_m = max(min_side_km * 1000.0, haversine_m(o_loc, d_loc) + 1000.0)
    half_lat = (side_m / 2.0) / METERS_PER_DEG_LAT
    half_lon = (side_m / 2.0) / meters_per_deg_lon(mid_lat)

    keep = {
        nid
        for nid, node in g.nodes.items()
        if abs(node.location.lat - mid_lat) <= half_lat and abs(node.location.lon - mid_lon) <= half_lon
    }
    keep.add(origin)
    keep.add(dest)

    nodes = [n for nid, n in g.nodes.items() if nid in keep]
    edges = [e for e in g.edges.values() if e.from_node in keep and e.to_node in keep]
    sub = StreetGraph(nodes, edges)

    if not _reachable(sub, origin, dest):
        raise DisconnectedError(
            f"{dest!r} not reachable from {origin!r} within the {side_m / 1000.0:.2f} km "
            f"bounding box; consider raising min_side_km"
        )
    return sub


def _reachable(g: StreetGraph, source: str, target: str) -> bool:
    if source == target:
        return True
    seen = {source}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for edge in g.out_edges(v):
            w = edge.to_node
            if w == target:
                return True
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return False


def edge_zone_scores(
    e: Edge,
    g: StreetGraph,
    zones: SharedZoneSet,
    ring_radii_m: tuple[float, float, float] = DEFAULT_RING_RADII_M,
    pa_radius_m: float = DEFAULT_PA_RADIUS_M,
) -> tuple[Optional[int], bool]:
    """Classify an edge against the shared-space zones by its midpoint.

    Returns ``(ring_index, near_micro)`` where ring_index is the innermost ring
    (0, 1 or 2) whose radius contains the midpoint across all meso zone
    centers, or None beyond the outer ring; near_micro is True iff the midpoint
    lies within ``pa_radius_m`` of any micro point.
    """
    mid = g.edge_midpoint(e)
    ring: Optional[int] = None
    if zones.meso_zones:
        d_meso = min(haversine_m(mid, z) for z in zones.meso_zones)
        for i, radius in enumerate(ring_radii_m):
            if d_meso <= radius:
                ring = i
                break
    near_micro = any(haversine_m(mid, p) <= pa_radius_m for p in zones.micro_points)
    return ring, near_micro
