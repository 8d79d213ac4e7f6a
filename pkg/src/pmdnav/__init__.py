"""Socially aware route planning and shared-space micro-simulation for PMDs."""

from .geo import GeoPoint, haversine_m
from .graph import (
    Edge,
    Node,
    SharedZoneSet,
    StreetGraph,
    dump_graph,
    dump_zones,
    edge_zone_scores,
    load_graph,
    load_zones,
    subnetwork_bbox,
)
from .centrality import edge_betweenness, minmax_scale
from .router import (
    BatchStats,
    HazardWeights,
    RouteQuery,
    RouteResult,
    RouterCache,
    assign_edge_weights,
    batch_experiment,
    plan_social_route,
    shortest_path,
)
from .sfm import (
    AgentState,
    Obstacle,
    PmdTypeParams,
    SfmConstants,
    World,
    goal_force,
    group_coherence,
    group_gaze,
    group_repulsion,
    pair_repulsion,
    step,
    total_force,
    wall_force,
)
from .scenarios import (
    ScenarioSpec,
    SimulationResult,
    build_scenario,
    compare_types,
    min_consecutive_displacement,
    run_scenario,
)
from .synth import grid_city

__version__ = "0.1.0"
