import random

import pytest

from pmdnav.geo import GeoPoint, METERS_PER_DEG_LAT
from pmdnav.graph import Edge, Node, SharedZoneSet, StreetGraph


def planar_point(x_m: float, y_m: float) -> GeoPoint:
    """Planar meters near the equator mapped onto lat/lon."""
    return GeoPoint(y_m / METERS_PER_DEG_LAT, x_m / METERS_PER_DEG_LAT)


def planar_graph(nodes: dict[str, tuple[float, float]],
                 edges: list[tuple[str, str, str, float]]) -> StreetGraph:
    return StreetGraph(
        [Node(nid, planar_point(x, y)) for nid, (x, y) in nodes.items()],
        [Edge(eid, u, v, length) for eid, u, v, length in edges],
    )


def random_digraph(rng: random.Random, n: int | None = None) -> StreetGraph:
    """Small random directed graph with geocoded nodes and admissible lengths."""
    from pmdnav.geo import haversine_m

    if n is None:
        n = rng.randint(2, 10)
    points = {f"v{i}": planar_point(rng.uniform(0, 2000.0), rng.uniform(0, 2000.0))
              for i in range(n)}
    edges = []
    for u in points:
        for v in points:
            if u != v and rng.random() < 2.5 / n:
                length = haversine_m(points[u], points[v]) * (1.0 + 0.5 * rng.random()) + 1.0
                edges.append(Edge(f"e{len(edges)}", u, v, length))
    return StreetGraph([Node(nid, p) for nid, p in points.items()], edges)


def detour_fixture(detour_outer_m: float):
    """Two-route fixture: a 1000 m direct route whose long middle edge crosses
    an inner hazard ring, against a clean detour O-C1-C2-D of
    2*detour_outer_m + 350. Returns (graph, zones)."""
    nodes = {
        "O": (0.0, 0.0), "A": (150.0, 0.0), "B": (850.0, 0.0), "D": (1000.0, 0.0),
        "C1": (333.0, 220.0), "C2": (667.0, 220.0),
    }
    spans = [
        ("oa", "O", "A", 150.0), ("ab", "A", "B", 700.0), ("bd", "B", "D", 150.0),
        ("oc", "O", "C1", detour_outer_m), ("cc", "C1", "C2", 350.0),
        ("cd", "C2", "D", detour_outer_m),
    ]
    edges = []
    for eid, u, v, length in spans:
        edges.append((eid, u, v, length))
        edges.append((eid + ".r", v, u, length))
    g = planar_graph(nodes, edges)
    zones = SharedZoneSet(meso_zones=(planar_point(500.0, -90.0),))
    return g, zones


@pytest.fixture(scope="session")
def grid_city_small():
    from pmdnav.synth import grid_city

    return grid_city(rows=12, cols=12, spacing_m=100.0, n_meso=2, n_micro=3, seed=3)


@pytest.fixture(scope="session")
def grid_city_full():
    from pmdnav.synth import grid_city

    return grid_city(seed=0)
