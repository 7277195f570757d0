"""Deterministic discrete-time 2D world: unicycle kinematics, binary cone
sensor, inelastic collision resolution, seeded spawning."""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field, replace

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

#: Pairwise separation tolerance after collision resolution, in meters.
COLLISION_TOL = 1e-9

#: Maximum separation sweeps before residual overlap is logged and accepted.
MAX_COLLISION_SWEEPS = 32


class WorldConfigError(ValueError):
    """A world configuration violates its invariants."""


class SpawnInfeasibleError(WorldConfigError):
    """The requested number of agents cannot be placed without overlap."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    t = theta % TWO_PI
    # fmod of a tiny negative can round up to exactly 2*pi
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass
class AgentState:
    """Pose and commanded velocities of one robot."""

    x: float
    y: float
    theta: float  # radians, wrapped to [0, 2*pi)
    v: float = 0.0  # m/s, current forward command
    omega: float = 0.0  # rad/s, current turn command


@dataclass(frozen=True)
class WorldConfig:
    """World parameters; defaults follow the base experiment setup."""

    n_agents: int = 10
    spawn_width: float = 1.2  # meters, side of the square spawn region
    dt: float = 1.0 / 7.5  # seconds per tick
    v_max: float = 0.2  # m/s
    omega_max: float = 2.0  # rad/s
    agent_radius: float = 0.1  # meters
    sense_range: float = 3.6  # meters
    fov: float = 0.4  # radians, full opening angle of the sensor cone
    fov_is_half_angle: bool = False  # alternate reading of the opening angle

    def validate(self) -> None:
        problems = []
        if self.n_agents < 2:
            problems.append("n_agents must be >= 2")
        for name in ("spawn_width", "dt", "v_max", "omega_max",
                     "agent_radius", "sense_range", "fov"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be strictly positive")
        if problems:
            raise WorldConfigError("; ".join(problems))
        # Necessary packing bound: centers pairwise > 2r fit on a square
        # lattice of pitch 2r with (floor(W/2r)+1)^2 sites at most.
        pitch = 2.0 * self.agent_radius
        per_side = int(self.spawn_width / pitch) + 1
        if per_side * per_side < self.n_agents:
            raise SpawnInfeasibleError(
                f"{self.n_agents} discs of radius {self.agent_radius} cannot "
                f"fit without overlap in a {self.spawn_width}x"
                f"{self.spawn_width} spawn square"
            )

    @property
    def half_fov(self) -> float:
        return self.fov if self.fov_is_half_angle else 0.5 * self.fov


@dataclass
class WorldState:
    """All agent states at one tick."""

    agents: list[AgentState]
    tick: int = 0

    def copy(self) -> WorldState:
        return WorldState([replace(a) for a in self.agents], self.tick)


def spawn(config: WorldConfig, seed: int) -> WorldState:
    """Place agents uniformly in the spawn square with uniform headings.

    Overlapping placements are rejection-resampled; identical seeds produce
    identical worlds. Raises SpawnInfeasibleError when an agent cannot be
    placed within 10*N attempts.
    """
    config.validate()
    rng = random.Random(seed)
    half = 0.5 * config.spawn_width
    min_sep_sq = (2.0 * config.agent_radius) ** 2
    max_attempts = 10 * config.n_agents
    agents: list[AgentState] = []
    for i in range(config.n_agents):
        for _ in range(max_attempts):
            x = rng.uniform(-half, half)
            y = rng.uniform(-half, half)
            theta = wrap_angle(rng.uniform(0.0, TWO_PI))
            if all((x - a.x) ** 2 + (y - a.y) ** 2 > min_sep_sq
                   for a in agents):
                agents.append(AgentState(x, y, theta))
                break
        else:
            raise SpawnInfeasibleError(
                f"could not place agent {i} after {max_attempts} attempts"
            )
    return WorldState(agents, tick=0)


def step_kinematics(world: WorldState,
                    controls: list[tuple[float, float]],
                    config: WorldConfig) -> WorldState:
    """Advance one tick: apply (v, omega) commands, then resolve collisions.

    Commands outside the actuation bounds are clamped (logged, not an error).
    """
    if len(controls) != len(world.agents):
        raise ValueError(
            f"expected {len(world.agents)} control pairs, got {len(controls)}"
        )
    dt = config.dt
    v_max = config.v_max
    w_max = config.omega_max
    agents = []
    for agent, (v, omega) in zip(world.agents, controls):
        if not (-v_max <= v <= v_max) or not (-w_max <= omega <= w_max):
            log.debug("saturated command (%g, %g) at tick %d",
                      v, omega, world.tick)
            v = min(max(v, -v_max), v_max)
            omega = min(max(omega, -w_max), w_max)
        agents.append(AgentState(
            agent.x + v * math.cos(agent.theta) * dt,
            agent.y + v * math.sin(agent.theta) * dt,
            wrap_angle(agent.theta + omega * dt),
            v,
            omega,
        ))
    return resolve_collisions(WorldState(agents, world.tick + 1), config)


def resolve_collisions(world: WorldState, config: WorldConfig) -> WorldState:
    """Separate overlapping pairs inelastically.

    Each overlapping pair is translated apart equally along the
    center-to-center line to exactly 2r; pairs are processed in ascending
    (i, j) order and swept until clean or MAX_COLLISION_SWEEPS elapse.
    Headings and commanded velocities are untouched.
    """
    n = len(world.agents)
    target = 2.0 * config.agent_radius
    # Trigger on violations beyond the resolution tolerance so that pairs
    # projected to exactly 2r (give or take float rounding) stay settled.
    trigger_sq = (target - COLLISION_TOL) ** 2
    xs = [a.x for a in world.agents]
    ys = [a.y for a in world.agents]
    dirty = True
    for _ in range(MAX_COLLISION_SWEEPS):
        dirty = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                dx = xs[j] - xs[i]
                dy = ys[j] - ys[i]
                d_sq = dx * dx + dy * dy
                if d_sq >= trigger_sq:
                    continue
                dirty = True
                d = math.sqrt(d_sq)
                if d > 0.0:
                    ux, uy = dx / d, dy / d
                else:
                    ux, uy = 1.0, 0.0  # coincident centers: split along +x
                shift = 0.5 * (target - d)
                xs[i] -= ux * shift
                ys[i] -= uy * shift
                xs[j] += ux * shift
                ys[j] += uy * shift
        if not dirty:
            break
    if dirty:
        log.warning("residual overlap after %d collision sweeps at tick %d",
                    MAX_COLLISION_SWEEPS, world.tick)
    agents = [AgentState(x, y, a.theta, a.v, a.omega)
              for x, y, a in zip(xs, ys, world.agents)]
    return WorldState(agents, world.tick)


def _disc_sector_intersects(rel_x: float, rel_y: float, disc_r: float,
                            axis: float, half_angle: float,
                            reach: float) -> bool:
    """Exact test: does a disc intersect the sector (apex at origin)?

    The sector has its axis along `axis`, half opening `half_angle` and
    radius `reach`. Works for any half_angle in (0, pi].
    """
    d_sq = rel_x * rel_x + rel_y * rel_y
    if d_sq <= disc_r * disc_r:
        return True  # disc covers the apex
    limit = reach + disc_r
    if d_sq > limit * limit:
        return False
    # Inside the angular wedge: the nearest sector point lies along the
    # center ray, so reach + disc_r is the only remaining constraint.
    d = math.sqrt(d_sq)
    if rel_x * math.cos(axis) + rel_y * math.sin(axis) >= math.cos(half_angle) * d:
        return True
    # Outside the wedge: the nearest sector point lies on one of the two
    # straight edges (arc-interior minima would place the center inside
    # the wedge).
    for sign in (1.0, -1.0):
        ex = math.cos(axis + sign * half_angle)
        ey = math.sin(axis + sign * half_angle)
        t = rel_x * ex + rel_y * ey
        t = min(max(t, 0.0), reach)
        px = rel_x - t * ex
        py = rel_y - t * ey
        if px * px + py * py <= disc_r * disc_r:
            return True
    return False


def sense(world: WorldState, i: int, config: WorldConfig) -> int:
    """Binary cone sensor: 1 iff any other agent's body disc intersects the
    forward sector of agent i (exact disc-sector geometry)."""
    me = world.agents[i]
    half_angle = config.half_fov
    reach = config.sense_range
    disc_r = config.agent_radius
    disc_r_sq = disc_r * disc_r
    limit = reach + disc_r
    limit_sq = limit * limit
    cos_half = math.cos(half_angle)
    mx, my = me.x, me.y
    ax = math.cos(me.theta)
    ay = math.sin(me.theta)
    # Edge directions of the sector boundary.
    e1x = math.cos(me.theta + half_angle)
    e1y = math.sin(me.theta + half_angle)
    e2x = math.cos(me.theta - half_angle)
    e2y = math.sin(me.theta - half_angle)
    for j, other in enumerate(world.agents):
        if j == i:
            continue
        rx = other.x - mx
        ry = other.y - my
        d_sq = rx * rx + ry * ry
        if d_sq <= disc_r_sq:
            return 1
        if d_sq > limit_sq:
            continue
        d = math.sqrt(d_sq)
        if rx * ax + ry * ay >= cos_half * d:
            return 1
        for ex, ey in ((e1x, e1y), (e2x, e2y)):
            t = rx * ex + ry * ey
            if t < 0.0:
                t = 0.0
            elif t > reach:
                t = reach
            px = rx - t * ex
            py = ry - t * ey
            if px * px + py * py <= disc_r_sq:
                return 1
    return 0


def sense_all(world: WorldState, config: WorldConfig) -> list[int]:
    """Sensor readings for every agent on the current state."""
    return [sense(world, i, config) for i in range(len(world.agents))]


def min_pairwise_distance(world: WorldState) -> float:
    """Smallest center-to-center distance (debug/invariant helper)."""
    best = math.inf
    agents = world.agents
    for i in range(len(agents) - 1):
        for j in range(i + 1, len(agents)):
            d = math.hypot(agents[j].x - agents[i].x,
                           agents[j].y - agents[i].y)
            if d < best:
                best = d
    return best
