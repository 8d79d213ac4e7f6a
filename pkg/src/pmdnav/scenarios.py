"""Simulation situations, the type comparison harness, and trajectory analysis.

Geometries are fixtures of this package (the published reference setups):
street scenarios run in a closed 4 m x 30 m corridor with bidirectional flow,
gate scenarios in two 10 m x 8 m rooms joined by a 1.2 m opening with
opposing ingress/egress flows routed through a per-agent waypoint in the gap.
Low crowd means 5 agents, heavy means 20. Every dimension can be overridden
and is echoed into output metadata.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, replace
from typing import Optional

from .errors import ValidationError
from .sfm import (
    AgentState,
    Obstacle,
    PmdTypeParams,
    SfmConstants,
    TYPE_PRESETS,
    Vec,
    World,
    step,
)

KINDS = ("gate_low", "street_low", "street_heavy")
PMD_TYPES = ("type1", "type2", "mixed", "pedestrian")


@dataclass(frozen=True)
class Geometry:
    corridor_length_m: float = 30.0
    corridor_width_m: float = 4.0
    room_length_m: float = 10.0
    room_width_m: float = 8.0
    gate_opening_m: float = 1.2
    low_crowd: int = 5
    heavy_crowd: int = 20

    def __post_init__(self):
        for name in ("corridor_length_m", "corridor_width_m", "room_length_m",
                     "room_width_m", "gate_opening_m"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if self.gate_opening_m >= self.room_width_m:
            raise ValidationError("gate opening must be narrower than the room")
        if self.low_crowd < 1 or self.heavy_crowd < 1:
            raise ValidationError("crowd sizes must be >= 1")


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    pmd_type: str = "type1"
    seed: int = 0
    geometry: Geometry = Geometry()
    constants: SfmConstants = SfmConstants()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.pmd_type not in PMD_TYPES:
            raise ValidationError(f"pmd_type must be one of {PMD_TYPES}, got {self.pmd_type!r}")


class TrajSample:
    __slots__ = ("t", "x", "y", "vx", "vy", "arrived")

    def __init__(self, t, x, y, vx, vy, arrived):
        self.t = t
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.arrived = arrived


@dataclass
class SimulationResult:
    end_time_s: float
    censored: bool
    arrived_count: int
    trajectories: dict[str, list[TrajSample]]
    min_consecutive_displacement_m: Optional[float]

    def resolvable_at(self, res_m: float) -> bool:
        if self.min_consecutive_displacement_m is None:
            raise ValidationError("no moving samples to assess resolution against")
        return self.min_consecutive_displacement_m >= res_m


def _pick_type(pmd_type: str, index: int) -> PmdTypeParams:
    if pmd_type == "mixed":
        return TYPE_PRESETS["type1"] if index % 2 == 0 else TYPE_PRESETS["type2"]
    return TYPE_PRESETS[pmd_type]


def _rect_walls(x0: float, y0: float, x1: float, y1: float) -> list[Obstacle]:
    return [
        Obstacle.segment((x0, y0), (x1, y0)),
        Obstacle.segment((x1, y0), (x1, y1)),
        Obstacle.segment((x1, y1), (x0, y1)),
        Obstacle.segment((x0, y1), (x0, y0)),
    ]


def _goal_berths(n: int, x_deep: float, x_step: float, rows: tuple[float, ...]) -> list[Vec]:
    """Arrival spots zigzagged one per column so frozen arrivals never form a
    fence across a later agent's path (weak goal pull cannot breach a tight
    cluster of stopped bodies)."""
    return [(x_deep - i * x_step, rows[i % len(rows)]) for i in range(n)]


def _street_world(spec: ScenarioSpec, count: int) -> World:
    geo = spec.geometry
    length, width = geo.corridor_length_m, geo.corridor_width_m
    rng = random.Random(spec.seed)
    walls = _rect_walls(0.0, 0.0, length, width)
    n_east = (count + 1) // 2
    n_west = count - n_east
    band = min(length / 3.0, 1.0 + 0.8 * max(n_east, n_west))
    # keep-right bias with an overlap band so opposing streams still interact
    lo, hi = 0.7, width - 0.7
    mid = (lo + hi) / 2.0
    # berth rows hug the centerline: a body frozen within ~1.3 m of a wall
    # leaves a stable wall pocket that traps weak-goal agents behind it
    rows = (mid - 0.4, mid, mid + 0.4)
    east_goals = _goal_berths(n_east, length - 1.0, 1.2, rows)
    west_goals = _goal_berths(n_west, 1.0, -1.2, rows)
    agents = []
    for i in range(count):
        eastbound = i < n_east
        if eastbound:
            start = (rng.uniform(1.0, 1.0 + band), rng.uniform(lo, mid + 0.6))
            goal = east_goals[i]
        else:
            start = (rng.uniform(length - 1.0 - band, length - 1.0), rng.uniform(mid - 0.6, hi))
            goal = west_goals[i - n_east]
        agents.append(AgentState(
            id=f"a{i}", position=start, goal=goal,
            type_params=_pick_type(spec.pmd_type, i),
        ))
    return World(tuple(agents), (), tuple(walls), spec.constants)


def _gate_world(spec: ScenarioSpec, count: int) -> World:
    geo = spec.geometry
    room_l, width, gap = geo.room_length_m, geo.room_width_m, geo.gate_opening_m
    total = 2.0 * room_l
    mid_y = width / 2.0
    rng = random.Random(spec.seed)
    walls = _rect_walls(0.0, 0.0, total, width)
    walls.append(Obstacle.segment((room_l, 0.0), (room_l, mid_y - gap / 2.0)))
    walls.append(Obstacle.segment((room_l, mid_y + gap / 2.0), (room_l, width)))
    n_ingress = (count + 1) // 2
    n_egress = count - n_ingress
    rows_in = (mid_y - 1.2, mid_y, mid_y + 1.2)
    ingress_goals = _goal_berths(n_ingress, total - 1.0, 1.2, rows_in)
    egress_goals = _goal_berths(n_egress, 1.0, -1.2, rows_in)
    # entry/exit steering points sit one waypoint radius either side of the
    # divider, so the exit point cannot be consumed before the plane is crossed
    # and a bounced-back agent is always pulled through the opening again
    reach = spec.constants.waypoint_tolerance_m
    agents = []
    for i in range(count):
        ingress = i < n_ingress
        x0 = rng.uniform(1.0, min(4.0, room_l - 1.0))
        y0 = rng.uniform(mid_y - 2.0, mid_y + 2.0)
        # keep-right split inside the opening so opposing streams pass obliquely
        if ingress:
            wp_y = rng.uniform(mid_y - 0.45 * gap, mid_y - 0.1 * gap)
            start, berth = (x0, y0), ingress_goals[i]
            entry, exit_ = (room_l - reach, wp_y), (room_l + reach, wp_y)
        else:
            wp_y = rng.uniform(mid_y + 0.1 * gap, mid_y + 0.45 * gap)
            start, berth = (total - x0, y0), egress_goals[i - n_ingress]
            entry, exit_ = (room_l + reach, wp_y), (room_l - reach, wp_y)
        agents.append(AgentState(
            id=f"a{i}", position=start, goal=entry,
            waypoints=(exit_, berth),
            type_params=_pick_type(spec.pmd_type, i),
        ))
    return World(tuple(agents), (), tuple(walls), spec.constants)


def build_scenario(spec: ScenarioSpec) -> World:
    """Deterministic seeded World for one of the reference situations."""
    count = spec.geometry.heavy_crowd if spec.kind == "street_heavy" else spec.geometry.low_crowd
    if spec.kind == "gate_low":
        return _gate_world(spec, count)
    return _street_world(spec, count)


def build_fig_low_crowd(constants: SfmConstants = SfmConstants()) -> World:
    """Two PMDs heading in opposite directions around two obstacles, open plane."""
    agents = (
        AgentState("a0", position=(0.0, 1.9), goal=(16.0, 2.1), type_params=TYPE_PRESETS["type1"]),
        AgentState("a1", position=(16.0, 2.1), goal=(0.0, 1.9), type_params=TYPE_PRESETS["type1"]),
    )
    obstacles = (Obstacle.point((6.0, 2.3)), Obstacle.point((10.0, 1.7)))
    return World(agents, obstacles, (), constants)


def build_fig_high_crowd(constants: SfmConstants = SfmConstants()) -> World:
    """Five PMDs with independent targets; the first two walk as one group."""
    specs = [
        ((0.0, 0.0), (14.0, 3.0), "g0"),
        ((0.0, 0.8), (14.0, 3.8), "g0"),
        ((14.0, 0.5), (0.0, 3.5), None),
        ((7.0, -3.0), (7.0, 6.0), None),
        ((13.0, 4.0), (1.0, -1.0), None),
    ]
    agents = tuple(
        AgentState(f"a{i}", position=p, goal=g, group_id=gid, type_params=TYPE_PRESETS["type1"])
        for i, (p, g, gid) in enumerate(specs)
    )
    return World(agents, (), (), constants)


def run_scenario(w: World, max_time_s: float) -> SimulationResult:
    """Step until every agent has arrived or the time cap; record trajectories.

    end_time_s is the time of the last arrival; hitting the cap flags the
    result as censored with end_time_s equal to the cap.
    """
    if not max_time_s > 0:
        raise ValidationError(f"max_time_s must be > 0, got {max_time_s}")
    if not w.agents:
        return SimulationResult(0.0, False, 0, {}, None)
    dt = w.constants.dt_s
    trajectories: dict[str, list[TrajSample]] = {a.id: [] for a in w.agents}

    def record(world: World, t: float):
        for a in world.agents:
            trajectories[a.id].append(
                TrajSample(t, a.position[0], a.position[1], a.velocity[0], a.velocity[1], a.arrived)
            )

    t = 0.0
    record(w, t)
    end_time = 0.0
    n_steps = int(round(max_time_s / dt))
    censored = True
    for _ in range(n_steps):
        prev_arrived = sum(1 for a in w.agents if a.arrived)
        w = step(w)
        t += dt
        record(w, t)
        now_arrived = sum(1 for a in w.agents if a.arrived)
        if now_arrived > prev_arrived:
            end_time = t
        if now_arrived == len(w.agents):
            censored = False
            break
    arrived_count = sum(1 for a in w.agents if a.arrived)
    if censored:
        end_time = max_time_s
    result = SimulationResult(end_time, censored, arrived_count, trajectories, None)
    result.min_consecutive_displacement_m = _min_displacement_or_none(result)
    return result


def _min_displacement_or_none(result: SimulationResult) -> Optional[float]:
    best: Optional[float] = None
    for samples in result.trajectories.values():
        for k in range(1, len(samples)):
            if samples[k].arrived:
                break  # arrival freezes the agent; later samples are static
            prev = samples[k - 1]
            cur = samples[k]
            d = math.hypot(cur.x - prev.x, cur.y - prev.y)
            if best is None or d < best:
                best = d
    return best


def min_consecutive_displacement(result: SimulationResult) -> float:
    """Smallest pre-arrival displacement between consecutive samples, any agent."""
    value = _min_displacement_or_none(result)
    if value is None:
        raise ValidationError("no moving samples in the simulation result")
    return value


@dataclass
class TypeComparison:
    kind: str
    seed: int
    t1_s: float
    t2_s: float
    t1_censored: bool
    t2_censored: bool


def compare_types(
    spec: ScenarioSpec,
    max_time_s: float,
    params_a: PmdTypeParams = TYPE_PRESETS["type1"],
    params_b: PmdTypeParams = TYPE_PRESETS["type2"],
) -> TypeComparison:
    """Run the identical seeded scenario with every agent on params_a, then
    params_b, and report both end times (censored runs flagged)."""
    times = []
    flags = []
    for params in (params_a, params_b):
        world = build_scenario(replace(spec, pmd_type="type1"))
        world = World(
            tuple(replace(a, type_params=params) for a in world.agents),
            world.obstacles, world.walls, world.constants,
        )
        result = run_scenario(world, max_time_s)
        times.append(result.end_time_s)
        flags.append(result.censored)
    return TypeComparison(spec.kind, spec.seed, times[0], times[1], flags[0], flags[1])


def write_trajectories_csv(result: SimulationResult, fp) -> None:
    """CSV rows ``t,agent_id,x,y,vx,vy,arrived`` sorted by time then agent id."""
    fp.write("t,agent_id,x,y,vx,vy,arrived\n")
    rows = []
    for aid in sorted(result.trajectories):
        for s in result.trajectories[aid]:
            rows.append((s.t, aid, s))
    rows.sort(key=lambda r: (r[0], r[1]))
    for t, aid, s in rows:
        fp.write(f"{t:.3f},{aid},{s.x:.6f},{s.y:.6f},{s.vx:.6f},{s.vy:.6f},{int(s.arrived)}\n")


def load_world(document: bytes | str) -> tuple[World, float]:
    """Parse the scenario JSON format; returns (World, max_time_s).

    ``{"agents":[{"id","position":[x,y],"goal":[x,y],"velocity":?,"desired_speed":?,
    "type":"type1|type2|pedestrian","group":?,"waypoints":?}...],
    "obstacles":[{"point":[x,y]}|{"segment":[[..],[..]]}...], "walls":[...],
    "constants":{...overrides...}, "dt":?, "max_time":?}``
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed scenario document: {exc}") from exc
    if not isinstance(doc, dict) or "agents" not in doc:
        raise ValidationError("scenario document must be an object with an 'agents' list")

    overrides = dict(doc.get("constants", {}))
    if "dt" in doc:
        overrides["dt_s"] = float(doc["dt"])
    valid = set(SfmConstants.__dataclass_fields__)
    unknown = set(overrides) - valid
    if unknown:
        raise ValidationError(f"unknown constants overrides: {sorted(unknown)}")
    constants = SfmConstants(**overrides)

    def vec(v, what) -> Vec:
        if not (isinstance(v, list) and len(v) == 2):
            raise ValidationError(f"{what} must be an [x, y] pair")
        return (float(v[0]), float(v[1]))

    def parse_obstacle(raw) -> Obstacle:
        if "point" in raw:
            return Obstacle.point(vec(raw["point"], "obstacle point"))
        if "segment" in raw:
            seg = raw["segment"]
            if not (isinstance(seg, list) and len(seg) == 2):
                raise ValidationError("segment must hold two endpoints")
            return Obstacle.segment(vec(seg[0], "segment end"), vec(seg[1], "segment end"))
        raise ValidationError(f"obstacle entry needs 'point' or 'segment': {raw}")

    agents = []
    for raw in doc["agents"]:
        type_name = raw.get("type", "pedestrian")
        if type_name not in TYPE_PRESETS:
            raise ValidationError(f"unknown agent type {type_name!r}")
        agents.append(AgentState(
            id=str(raw["id"]),
            position=vec(raw["position"], "agent position"),
            goal=vec(raw["goal"], "agent goal"),
            velocity=vec(raw["velocity"], "agent velocity") if "velocity" in raw else (0.0, 0.0),
            desired_speed=float(raw.get("desired_speed", 1.3)),
            type_params=TYPE_PRESETS[type_name],
            group_id=str(raw["group"]) if raw.get("group") is not None else None,
            waypoints=tuple(vec(p, "waypoint") for p in raw.get("waypoints", [])),
        ))
    obstacles = tuple(parse_obstacle(o) for o in doc.get("obstacles", []))
    walls = tuple(parse_obstacle(o) for o in doc.get("walls", []))
    world = World(tuple(agents), obstacles, walls, constants)
    return world, float(doc.get("max_time", 120.0))


def scenario_metadata(spec: ScenarioSpec, result: SimulationResult) -> dict:
    """Provenance record for a run: effective geometry, constants and outcome."""
    return {
        "kind": spec.kind,
        "pmd_type": spec.pmd_type,
        "seed": spec.seed,
        "geometry": asdict(spec.geometry),
        "constants": asdict(spec.constants),
        "end_time_s": result.end_time_s,
        "censored": result.censored,
        "arrived_count": result.arrived_count,
        "min_consecutive_displacement_m": result.min_consecutive_displacement_m,
        "resolvable_at_0.2m": (
            result.min_consecutive_displacement_m is not None
            and result.min_consecutive_displacement_m >= 0.2
        ),
    }
