"""Synthetic grid city used by the batch harness tests and CLI demos."""

from __future__ import annotations

import random

from .geo import GeoPoint, METERS_PER_DEG_LAT, haversine_m, meters_per_deg_lon
from .graph import Edge, Node, SharedZoneSet, StreetGraph


def grid_city(
    rows: int = 60,
    cols: int = 60,
    spacing_m: float = 100.0,
    base_lat: float = 28.52,
    base_lon: float = 77.18,
    n_meso: int = 6,
    n_micro: int = 12,
    seed: int = 0,
    curviness: float = 0.3,
) -> tuple[StreetGraph, SharedZoneSet]:
    """Rectangular street grid with bidirectional links and seeded shared-space zones.

    Links model curvy streets: each carries a seeded length multiplier in
    [1, 1 + curviness] over the great-circle distance between its endpoints
    (identical in both directions). Lengths never fall below straight-line
    distance, so the router's heuristic stays admissible; a perfectly uniform
    grid would be degenerate anyway (all monotone detours equal, so obstacles
    would cost nothing to avoid).
    """
    dlat = spacing_m / METERS_PER_DEG_LAT
    mid_lat = base_lat + (rows - 1) * dlat / 2.0
    dlon = spacing_m / meters_per_deg_lon(mid_lat)
    rng = random.Random(seed)

    nodes = []
    grid: list[list[GeoPoint]] = []
    for r in range(rows):
        row = []
        for c in range(cols):
            p = GeoPoint(base_lat + r * dlat, base_lon + c * dlon)
            row.append(p)
            nodes.append(Node(f"n{r}_{c}", p))
        grid.append(row)

    edges = []

    def link(r1, c1, r2, c2):
        length = haversine_m(grid[r1][c1], grid[r2][c2]) * (1.0 + curviness * rng.random())
        edges.append(Edge(f"e{r1}_{c1}-{r2}_{c2}", f"n{r1}_{c1}", f"n{r2}_{c2}", length))
        edges.append(Edge(f"e{r2}_{c2}-{r1}_{c1}", f"n{r2}_{c2}", f"n{r1}_{c1}", length))

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                link(r, c, r, c + 1)
            if r + 1 < rows:
                link(r, c, r + 1, c)

    lat_span = (rows - 1) * dlat
    lon_span = (cols - 1) * dlon

    def at(f_lat: float, f_lon: float) -> GeoPoint:
        return GeoPoint(base_lat + f_lat * lat_span, base_lon + f_lon * lon_span)

    # meso zones string along a jittered central axis, like a market street or
    # promenade corridor: a coherent shared-space band that cross-city routes
    # must either pay for or detour around. Micro points scatter city-wide.
    horizontal = rng.random() < 0.5
    meso = []
    for i in range(n_meso):
        along = 0.2 + 0.6 * (i + 0.5) / n_meso + rng.uniform(-0.02, 0.02)
        across = 0.5 + rng.uniform(-0.06, 0.06)
        meso.append(at(across, along) if horizontal else at(along, across))
    micro = [at(0.15 + 0.7 * rng.random(), 0.15 + 0.7 * rng.random()) for _ in range(n_micro)]
    zones = SharedZoneSet(meso_zones=tuple(meso), micro_points=tuple(micro))
    return StreetGraph(nodes, edges), zones
