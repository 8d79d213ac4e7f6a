"""Social force model for PMD/pedestrian local navigation.

Forces follow the classic formulation: goal attraction with relaxation time,
exponential boundary repulsion, elliptical inter-agent repulsion (potential
gradient taken analytically), and a group bundle of coherence, gaze and
member-repulsion terms. Per-type multipliers rescale each term so the same
dynamics cover pedestrians and both PMD classes.

Simulations run in a local planar frame (meters); there is no geographic
coupling. All force functions return an acceleration vector in m/s^2 as an
(ax, ay) tuple.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import ValidationError

Vec = tuple[float, float]

_EPS = 1e-12


@dataclass(frozen=True)
class SfmConstants:
    tau_s: float = 0.5            # relaxation time
    v0_mps: float = 1.3           # reference desired speed
    wall_a: float = 10.0          # boundary repulsion at contact, m/s^2
    wall_b: float = 0.1           # boundary decay length, m
    v0_rep: float = 2.1           # inter-agent potential strength, m^2/s^2
    sigma_m: float = 0.3          # inter-agent decay length, m
    # group strengths are calibrated against the per-type social factor
    # (5.1/6.6): stronger defaults turn coherence into an undamped spring and
    # the gaze brake freezes the pair in place
    beta1: float = 0.5            # gaze (turning discomfort) strength
    beta2: float = 0.3            # group coherence strength
    beta3: float = 0.3            # group member repulsion strength
    qa_threshold_m: Optional[float] = None  # None: (group size - 1) / 2
    qr_threshold_m: float = 0.5
    dt_s: float = 0.1
    goal_tolerance_m: float = 0.3
    waypoint_tolerance_m: float = 0.8  # looser: waypoints steer, they are not stops
    speed_cap_factor: float = 1.3

    def __post_init__(self):
        for name in ("tau_s", "v0_mps", "wall_a", "wall_b", "v0_rep", "sigma_m",
                     "beta1", "beta2", "beta3", "qr_threshold_m", "dt_s",
                     "goal_tolerance_m", "waypoint_tolerance_m", "speed_cap_factor"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if self.qa_threshold_m is not None and not self.qa_threshold_m > 0:
            raise ValidationError("qa_threshold_m must be > 0 or None")
        if self.dt_s > self.tau_s / 5.0 + _EPS:
            raise ValidationError(
                f"dt_s={self.dt_s} exceeds the tau_s/5 stability margin ({self.tau_s / 5.0})"
            )


@dataclass(frozen=True)
class PmdTypeParams:
    """Dimensionless multipliers applied to the force terms, per device type."""

    goal_factor: float = 1.0
    ped_repulse_factor: float = 1.0
    space_repulse_factor: float = 1.0
    social_factor: float = 1.0
    obstacle_factor: float = 1.0

    def __post_init__(self):
        for name in ("goal_factor", "ped_repulse_factor", "space_repulse_factor",
                     "social_factor", "obstacle_factor"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")


PEDESTRIAN = PmdTypeParams()
PMD_TYPE1 = PmdTypeParams(1.0, 1.5, 1.0, 5.1, 10.0)   # low speed, less space
PMD_TYPE2 = PmdTypeParams(0.7, 3.0, 2.1, 6.6, 18.0)   # high speed, more space

TYPE_PRESETS = {"pedestrian": PEDESTRIAN, "type1": PMD_TYPE1, "type2": PMD_TYPE2}


@dataclass(frozen=True)
class AgentState:
    id: str
    position: Vec
    goal: Vec
    velocity: Vec = (0.0, 0.0)
    desired_speed: float = 1.3
    type_params: PmdTypeParams = PEDESTRIAN
    group_id: Optional[str] = None
    waypoints: tuple[Vec, ...] = ()   # intermediate goals, consumed in order
    arrived: bool = False

    def __post_init__(self):
        if not self.desired_speed > 0:
            raise ValidationError(f"agent {self.id!r}: desired_speed must be > 0")


@dataclass(frozen=True)
class Obstacle:
    """Point (b is None) or segment geometry in planar meters."""

    a: Vec
    b: Optional[Vec] = None

    def __post_init__(self):
        if self.b is not None and self.a == self.b:
            raise ValidationError("segment endpoints must be distinct")

    @staticmethod
    def point(p: Vec) -> "Obstacle":
        return Obstacle(p)

    @staticmethod
    def segment(a: Vec, b: Vec) -> "Obstacle":
        return Obstacle(a, b)

    def closest_point(self, p: Vec) -> Vec:
        if self.b is None:
            return self.a
        ax, ay = self.a
        bx, by = self.b
        dx, dy = bx - ax, by - ay
        t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / (dx * dx + dy * dy)
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        return (ax + t * dx, ay + t * dy)

    def distance(self, p: Vec) -> float:
        c = self.closest_point(p)
        return math.hypot(p[0] - c[0], p[1] - c[1])


@dataclass(frozen=True)
class World:
    agents: tuple[AgentState, ...]
    obstacles: tuple[Obstacle, ...] = ()
    walls: tuple[Obstacle, ...] = ()
    constants: SfmConstants = SfmConstants()

    def __post_init__(self):
        seen = set()
        groups: dict[str, int] = {}
        for a in self.agents:
            if a.id in seen:
                raise ValidationError(f"duplicate agent id {a.id!r}")
            seen.add(a.id)
            if a.group_id is not None:
                groups[a.group_id] = groups.get(a.group_id, 0) + 1
        for gid, count in groups.items():
            if count < 2:
                raise ValidationError(f"group {gid!r} has {count} member; needs >= 2")

    def group_members(self, agent: AgentState) -> list[AgentState]:
        if agent.group_id is None:
            return []
        return [a for a in self.agents if a.group_id == agent.group_id]


def _unit(x: float, y: float) -> Vec:
    n = math.hypot(x, y)
    if n < _EPS:
        return (0.0, 0.0)
    return (x / n, y / n)


def _hashed_unit(id_a: str, id_b: str) -> Vec:
    """Deterministic pseudo-random direction for coincident-position fallbacks."""
    digest = hashlib.blake2b(f"{id_a}|{id_b}".encode(), digest_size=8).digest()
    angle = int.from_bytes(digest, "big") / 2**64 * 2.0 * math.pi
    return (math.cos(angle), math.sin(angle))


def goal_force(a: AgentState, c: SfmConstants) -> Vec:
    """Relaxation toward the desired velocity; pure braking at goal coincidence."""
    ex, ey = _unit(a.goal[0] - a.position[0], a.goal[1] - a.position[1])
    return (
        (a.desired_speed * ex - a.velocity[0]) / c.tau_s,
        (a.desired_speed * ey - a.velocity[1]) / c.tau_s,
    )


def _boundary_force(a: AgentState, obstacle: Obstacle, c: SfmConstants) -> Vec:
    cp = obstacle.closest_point(a.position)
    dx, dy = a.position[0] - cp[0], a.position[1] - cp[1]
    d = math.hypot(dx, dy)
    mag = c.wall_a * math.exp(-d / c.wall_b)
    if d < _EPS:
        # agent exactly on the boundary: push along the segment's left normal
        if obstacle.b is not None:
            nx, ny = _unit(-(obstacle.b[1] - obstacle.a[1]), obstacle.b[0] - obstacle.a[0])
        else:
            nx, ny = 1.0, 0.0
        return (mag * nx, mag * ny)
    return (mag * dx / d, mag * dy / d)


def wall_force(a: AgentState, boundaries: list[Obstacle] | tuple[Obstacle, ...],
               c: SfmConstants) -> Vec:
    """Exponential repulsion from the nearest boundary; zero with no boundaries."""
    if not boundaries:
        return (0.0, 0.0)
    nearest = min(boundaries, key=lambda o: o.distance(a.position))
    return _boundary_force(a, nearest, c)


def _ellipse_b_and_grad(rx: float, ry: float, step_x: float, step_y: float) -> tuple[float, float, float]:
    """Semi-minor axis b of the elliptical potential and its gradient wrt r.

    2b = sqrt((|r| + |r - s|)^2 - |s|^2) where s is the other agent's step
    vector; grad b = (A+B)/(4b) * (r/|r| + (r-s)/|r-s|).
    """
    big_a = math.hypot(rx, ry)
    qx, qy = rx - step_x, ry - step_y
    big_b = math.hypot(qx, qy)
    s_len2 = step_x * step_x + step_y * step_y
    total = big_a + big_b
    under = total * total - s_len2
    if under < _EPS:
        # r sits on the step segment: potential is at its crest, push radially
        gx, gy = _unit(rx, ry)
        return 0.0, gx, gy
    two_b = math.sqrt(under)
    coef = total / (2.0 * two_b)
    gx = rx / big_a if big_a > _EPS else 0.0
    gy = ry / big_a if big_a > _EPS else 0.0
    if big_b > _EPS:
        gx += qx / big_b
        gy += qy / big_b
    return 0.5 * two_b, coef * gx, coef * gy


def pair_repulsion(alpha: AgentState, beta: AgentState, c: SfmConstants) -> Vec:
    """Repulsion of alpha from beta: analytic negative gradient of the elliptical
    potential V0 * exp(-b/sigma), compressed behind beta's direction of motion.

    With beta at rest b reduces to the plain distance and the force is radial.
    Coincident positions fall back to a direction hashed from the two ids at
    the 1 cm magnitude, so the gradient never produces NaN.
    """
    rx = alpha.position[0] - beta.position[0]
    ry = alpha.position[1] - beta.position[1]
    dist = math.hypot(rx, ry)
    if dist < 1e-9:
        ux, uy = _hashed_unit(alpha.id, beta.id)
        mag = (c.v0_rep / c.sigma_m) * math.exp(-0.01 / c.sigma_m)
        return (mag * ux, mag * uy)
    speed = math.hypot(beta.velocity[0], beta.velocity[1])
    if speed < _EPS:
        mag = (c.v0_rep / c.sigma_m) * math.exp(-dist / c.sigma_m)
        return (mag * rx / dist, mag * ry / dist)
    step = speed * c.dt_s
    ex, ey = beta.velocity[0] / speed, beta.velocity[1] / speed
    b, gx, gy = _ellipse_b_and_grad(rx, ry, step * ex, step * ey)
    mag = (c.v0_rep / c.sigma_m) * math.exp(-b / c.sigma_m)
    return (mag * gx, mag * gy)


def _com(members: list[AgentState]) -> Vec:
    n = len(members)
    return (sum(m.position[0] for m in members) / n, sum(m.position[1] for m in members) / n)


def group_coherence(i: AgentState, members: list[AgentState], c: SfmConstants) -> Vec:
    """Attraction toward the group center of mass, gated beyond a distance threshold."""
    com = _com(members)
    dx, dy = com[0] - i.position[0], com[1] - i.position[1]
    threshold = c.qa_threshold_m if c.qa_threshold_m is not None else (len(members) - 1) / 2.0
    if math.hypot(dx, dy) <= threshold:
        return (0.0, 0.0)
    ux, uy = _unit(dx, dy)
    return (c.beta2 * ux, c.beta2 * uy)


def group_gaze(i: AgentState, members: list[AgentState], c: SfmConstants) -> Vec:
    """Braking that grows with the head-turn angle between motion and the group COM."""
    vx, vy = i.velocity
    speed = math.hypot(vx, vy)
    if speed < _EPS:
        return (0.0, 0.0)
    com = _com(members)
    ux, uy = _unit(com[0] - i.position[0], com[1] - i.position[1])
    if ux == 0.0 and uy == 0.0:
        return (0.0, 0.0)
    cos_a = max(-1.0, min(1.0, (vx * ux + vy * uy) / speed))
    alpha = math.acos(cos_a)
    return (-c.beta1 * alpha * vx, -c.beta1 * alpha * vy)


def group_repulsion(i: AgentState, members: list[AgentState], c: SfmConstants) -> Vec:
    """Pushes i away from any member closer than the repulsion threshold."""
    fx = fy = 0.0
    for k in members:
        if k.id == i.id:
            continue
        dx, dy = k.position[0] - i.position[0], k.position[1] - i.position[1]
        d = math.hypot(dx, dy)
        if d < _EPS or d >= c.qr_threshold_m:
            continue
        fx -= c.beta3 * dx / d
        fy -= c.beta3 * dy / d
    return (fx, fy)


def total_force(i: AgentState, w: World) -> Vec:
    """Type-scaled sum of the force terms.

    The obstacle factor applies to the single nearest element among walls and
    obstacles; the space-repulsive factor to every remaining (non-wall)
    obstacle; far walls only act through the nearest-element term, which their
    30 cm decay makes negligible anyway.
    """
    tp = i.type_params
    c = w.constants
    gx, gy = goal_force(i, c)
    fx = tp.goal_factor * gx
    fy = tp.goal_factor * gy

    scene = w.walls + w.obstacles
    nearest = None
    if scene:
        nearest = min(scene, key=lambda o: o.distance(i.position))
        ox, oy = _boundary_force(i, nearest, c)
        fx += tp.obstacle_factor * ox
        fy += tp.obstacle_factor * oy
    for o in w.obstacles:
        if o is nearest:
            continue
        ox, oy = _boundary_force(i, o, c)
        fx += tp.space_repulse_factor * ox
        fy += tp.space_repulse_factor * oy

    for j in w.agents:
        if j.id == i.id:
            continue
        px, py = pair_repulsion(i, j, c)
        fx += tp.ped_repulse_factor * px
        fy += tp.ped_repulse_factor * py

    members = w.group_members(i)
    if len(members) >= 2:
        cx, cy = group_coherence(i, members, c)
        zx, zy = group_gaze(i, members, c)
        rx, ry = group_repulsion(i, members, c)
        fx += tp.social_factor * (cx + zx + rx)
        fy += tp.social_factor * (cy + zy + ry)
    return (fx, fy)


def _advance_goal(a: AgentState, c: SfmConstants) -> AgentState:
    """Arrival bookkeeping: consume waypoints, then freeze at the final goal."""
    while not a.arrived:
        dx = a.goal[0] - a.position[0]
        dy = a.goal[1] - a.position[1]
        tol = c.waypoint_tolerance_m if a.waypoints else c.goal_tolerance_m
        if math.hypot(dx, dy) > tol:
            return a
        if a.waypoints:
            a = replace(a, goal=a.waypoints[0], waypoints=a.waypoints[1:])
        else:
            return replace(a, arrived=True, velocity=(0.0, 0.0))
    return a


def step(w: World) -> World:
    """One semi-implicit Euler step: v += dt*f (speed-capped), then x += dt*v.

    All forces are computed from the same frozen pre-step state. Agents within
    goal tolerance are frozen as arrived (they still repel others).
    """
    c = w.constants
    dt = c.dt_s
    marked = tuple(_advance_goal(a, c) if not a.arrived else a for a in w.agents)
    frozen = World(marked, w.obstacles, w.walls, c)
    forces = [None if a.arrived else total_force(a, frozen) for a in marked]
    agents = []
    for a, f in zip(marked, forces):
        if f is None:
            agents.append(a)
            continue
        vx = a.velocity[0] + dt * f[0]
        vy = a.velocity[1] + dt * f[1]
        cap = c.speed_cap_factor * a.desired_speed
        speed = math.hypot(vx, vy)
        if speed > cap:
            vx *= cap / speed
            vy *= cap / speed
        agents.append(replace(
            a,
            velocity=(vx, vy),
            position=(a.position[0] + dt * vx, a.position[1] + dt * vy),
        ))
    return World(tuple(agents), w.obstacles, w.walls, c)
