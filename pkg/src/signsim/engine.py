"""Simulation engine: runs the sense-plan-act loop per agent, manages seeded
replications, and collects trajectory/sign-event logs and per-leg metrics.

Movement advances every tick (dt); perception, attention, and the navigation
decision run every perception_interval. All randomness lives in the per
(agent, sign) recognition thresholds, so a run is a pure function of
(environment, task, config, master_seed).

Logged positions are quantized to 0.1 mm and per-leg path lengths accumulate
from exactly those quantized values, so metrics can be recomputed bit-for-bit
from the trajectory log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import attention, behavior, movement
from .behavior import NavMode, NavState
from .config import SimulationConfig
from .environment import Environment, NamedPoint, Task, TaskLeg
from .movement import AgentBody, NavGrid, PlannedPath
from .perception import CameraPose, render_view

WAYPOINT_TOLERANCE = 0.5  # m, advance to the next path node
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

TRAJECTORY_HEADER = ("replication", "agent", "t", "floor", "x", "y", "speed", "mode", "current_goal")
SIGN_EVENT_HEADER = ("replication", "agent", "t", "sign_id", "attention", "threshold",
                     "seen", "category", "decision")
METRICS_HEADER = ("replication", "agent", "leg", "completed", "travel_time", "path_length")


@dataclass
class LegMetric:
    replication: int
    agent: int
    leg: int
    completed: bool
    travel_time: float | None  # None when the leg was never attempted
    path_length: float | None


@dataclass
class RunLogs:
    replication: int
    trajectory_rows: list = field(default_factory=list)
    sign_event_rows: list = field(default_factory=list)
    leg_metrics: list = field(default_factory=list)
    heatmaps: dict = field(default_factory=dict)  # floor id -> uint32 (h, w)
    notes: list = field(default_factory=list)  # (agent, t, reason)


@dataclass
class _Agent:
    id: int
    floor: str
    body: AgentBody
    heading: tuple[float, float]
    nav: NavState = field(default_factory=NavState)
    path: PlannedPath | None = None
    wp_index: int = 0
    goal: tuple[str, tuple[float, float]] | None = None
    goal_desc: str = "none"
    goal_kind: str | None = None  # "target" | "clue" | "explore"
    explore_point: NamedPoint | None = None
    leg: int = 0
    leg_start_tick: int = 0
    leg_path_length: float = 0.0
    last_logged: tuple[float, float, str, int] | None = None  # x, y, floor, leg
    portal_exit: tuple[float, str, tuple[float, float]] | None = None  # (time, floor, point)
    abort_reason: str | None = None
    done: bool = False


def build_grids(env: Environment, cell_size: float) -> dict[str, NavGrid]:
    return {floor.id: movement.build_nav_grid(floor, cell_size) for floor in env.floors}


def _wall_arrays(env: Environment) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    out = {}
    for floor in env.floors:
        segs = floor.wall_segments()
        a = np.array([s[0] for s in segs], dtype=float)
        b = np.array([s[1] for s in segs], dtype=float)
        out[floor.id] = (a, b)
    return out


def _spawn_agents(env: Environment, task: Task, config: SimulationConfig,
                  grids: dict[str, NavGrid]) -> list[_Agent]:
    start = next(bp for bp in env.base_points if bp.id == task.legs[0].start)
    grid = grids[start.floor]
    agents = []
    for i in range(config.agents_per_replication):
        theta = i * _GOLDEN_ANGLE
        radius = 0.6 * math.sqrt(i)
        pos = (start.point[0] + radius * math.cos(theta),
               start.point[1] + radius * math.sin(theta))
        if grid.is_blocked(grid.cell_of(pos)):
            cell = movement.snap_to_unblocked(grid, pos)
            pos = grid.center_of(cell) if cell is not None else start.point
        agents.append(_Agent(
            id=i, floor=start.floor, body=AgentBody(position=pos, velocity=(0.0, 0.0)),
            heading=(math.cos(theta), math.sin(theta)),
        ))
    return agents


class _Planner:
    """plan_path with a per-replication cache keyed by start cell and goal."""

    def __init__(self, grids, portals, desired_speed):
        self.grids = grids
        self.portals = portals
        self.desired_speed = desired_speed
        self.cache = {}

    def plan(self, start: tuple[str, tuple[float, float]],
             goal: tuple[str, tuple[float, float]]) -> PlannedPath | None:
        floor, point = start
        key = (floor, self.grids[floor].cell_of(point), goal)
        if key not in self.cache:
            self.cache[key] = movement.plan_path(self.grids, self.portals, start, goal,
                                                 self.desired_speed)
        return self.cache[key]

    def length(self, start, goal) -> float:
        path = self.plan(start, goal)
        return path.total_length if path is not None else math.inf


def run_replication(env: Environment, task: Task, config: SimulationConfig, replication: int,
                    grids: dict[str, NavGrid] | None = None, dump=None) -> RunLogs:
    """Simulate one replication; deterministic given (env, task, config, replication)."""
    config.validate()
    grids = grids if grids is not None else build_grids(env, config.cell_size)
    walls = _wall_arrays(env)
    planner = _Planner(grids, env.portals, config.social_force.desired_speed)
    logs = RunLogs(replication=replication)
    logs.heatmaps = {f.id: np.zeros((grids[f.id].height, grids[f.id].width), dtype=np.uint32)
                     for f in env.floors}

    agents = _spawn_agents(env, task, config, grids)
    thresholds = behavior.init_thresholds(
        [a.id for a in agents], [s.id for s in env.signs], config.master_seed, replication)

    frustum = attention.frustum_map(config.camera, config.frustum)
    kappa = config.kappa
    dt = config.dt
    per_ticks = max(1, round(config.perception_interval / dt))
    max_ticks = math.ceil(len(task.legs) * config.leg_timeout / dt) + 1

    for tick in range(max_ticks):
        if all(a.done for a in agents):
            break
        t = tick * dt
        # Frozen snapshot so per-tick updates are synchronous.
        snapshot = [(a.id, a.floor, a.body) for a in agents
                    if not a.done and a.portal_exit is None]

        for agent in agents:
            if agent.done:
                continue
            leg = task.legs[agent.leg]
            leg_before = agent.leg

            if agent.portal_exit is not None:
                exit_time, exit_floor, exit_point = agent.portal_exit
                if t >= exit_time - 1e-9:
                    agent.floor = exit_floor
                    agent.body = AgentBody(position=exit_point, velocity=(0.0, 0.0))
                    agent.portal_exit = None
            in_portal = agent.portal_exit is not None

            if not in_portal and tick % per_ticks == 0:
                _perceive_and_decide(env, config, agent, leg, thresholds, frustum, kappa,
                                     planner, logs, t, dump)

            if not in_portal and not agent.done:
                if agent.goal is None and agent.nav.mode == NavMode.EXPLORING:
                    _choose_exploration(agent, env, planner)
                waypoint = None
                if agent.path is not None and agent.wp_index < len(agent.path.nodes):
                    node = agent.path.nodes[agent.wp_index]
                    if node.floor == agent.floor:
                        waypoint = node.point
                neighbors = [body for aid, floor, body in snapshot
                             if aid != agent.id and floor == agent.floor]
                agent.body = movement.social_force_step(
                    agent.body, neighbors, walls[agent.floor], waypoint,
                    config.social_force, dt)
                speed = math.hypot(*agent.body.velocity)
                if speed > 0.05:
                    agent.heading = (agent.body.velocity[0] / speed,
                                     agent.body.velocity[1] / speed)
                _advance_waypoints(agent, env, planner, t)

            # Quantized position for this tick's row; path length accumulates
            # from exactly the logged values.
            x = round(agent.body.position[0], 4)
            y = round(agent.body.position[1], 4)
            if agent.last_logged is not None:
                px, py, pfloor, pleg = agent.last_logged
                if pfloor == agent.floor and pleg == leg_before:
                    agent.leg_path_length += math.hypot(x - px, y - py)
            agent.last_logged = (x, y, agent.floor, leg_before)

            # Leg completion, timeout, abort.
            mode_for_row = agent.nav.mode
            ticks_in_leg = tick - agent.leg_start_tick + 1
            completed = (agent.portal_exit is None
                         and agent.floor == leg.target_floor
                         and math.dist(agent.body.position, leg.target_point) <= leg.arrival_radius)
            if completed:
                _record_leg(logs, config, agent, replication, True, ticks_in_leg)
                mode_for_row = NavMode.ARRIVED
                if agent.leg + 1 >= len(task.legs):
                    agent.done = True
                else:
                    _advance_leg(agent, tick)
            elif agent.abort_reason is not None:
                logs.notes.append((agent.id, t, agent.abort_reason))
                _record_leg(logs, config, agent, replication, False, ticks_in_leg)
                mode_for_row = NavMode.TIMED_OUT
                agent.done = True
            elif ticks_in_leg * dt >= config.leg_timeout:
                _record_leg(logs, config, agent, replication, False, ticks_in_leg)
                mode_for_row = NavMode.TIMED_OUT
                agent.done = True

            speed = round(math.hypot(*agent.body.velocity), 4)
            logs.trajectory_rows.append((
                replication, agent.id, t, agent.floor, x, y, speed,
                mode_for_row.value, f"leg{leg_before}:{agent.goal_desc}",
            ))
            grid = grids[agent.floor]
            cx, cy = grid.cell_of((x, y))
            logs.heatmaps[agent.floor][cy, cx] += 1

    # Legs never attempted (agent stopped earlier) get empty metric rows.
    for agent in agents:
        recorded = {m.leg for m in logs.leg_metrics if m.agent == agent.id}
        for leg_idx in range(len(task.legs)):
            if leg_idx not in recorded:
                logs.leg_metrics.append(LegMetric(replication, agent.id, leg_idx,
                                                  completed=False, travel_time=None,
                                                  path_length=None))
    logs.leg_metrics.sort(key=lambda m: (m.agent, m.leg))
    return logs


def _advance_leg(agent: _Agent, tick: int):
    agent.leg += 1
    agent.leg_start_tick = tick + 1
    agent.leg_path_length = 0.0
    agent.nav = NavState()
    agent.path = None
    agent.wp_index = 0
    agent.goal = None
    agent.goal_desc = "none"
    agent.goal_kind = None
    agent.explore_point = None


def _record_leg(logs: RunLogs, config: SimulationConfig, agent: _Agent, replication: int,
                completed: bool, ticks: int):
    logs.leg_metrics.append(LegMetric(
        replication, agent.id, agent.leg, completed=completed,
        travel_time=ticks * config.dt, path_length=agent.leg_path_length,
    ))


def _set_goal(agent: _Agent, planner: _Planner, goal, desc: str, kind: str):
    agent.goal = goal
    agent.goal_desc = desc
    agent.goal_kind = kind
    agent.path = planner.plan((agent.floor, agent.body.position), goal)
    agent.wp_index = 0
    return agent.path


def _clear_goal(agent: _Agent):
    agent.goal = None
    agent.goal_desc = "none"
    agent.goal_kind = None
    agent.explore_point = None


def _choose_exploration(agent: _Agent, env: Environment, planner: _Planner):
    bp = behavior.next_exploration_goal(
        agent.nav, env.base_points, (agent.floor, agent.body.position),
        lambda pos, point: planner.length(pos, (point.floor, point.point)),
    )
    agent.explore_point = bp
    path = _set_goal(agent, planner, (bp.floor, bp.point), f"explore:{bp.id}", "explore")
    if path is None:
        agent.abort_reason = f"exploration goal {bp.id} unreachable"


def _advance_waypoints(agent: _Agent, env: Environment, planner: _Planner, t: float):
    """Advance along the path; enter portals; consume exploration/clue goals."""
    while agent.path is not None and agent.wp_index < len(agent.path.nodes):
        node = agent.path.nodes[agent.wp_index]
        if node.floor != agent.floor:
            break
        if math.dist(agent.body.position, node.point) > WAYPOINT_TOLERANCE:
            break
        if node.enter_portal is not None:
            portal = node.enter_portal
            if portal.floor_a == agent.floor:
                exit_floor, exit_point = portal.floor_b, portal.point_b
            else:
                exit_floor, exit_point = portal.floor_a, portal.point_a
            agent.portal_exit = (t + portal.traversal_time, exit_floor, exit_point)
            agent.body = AgentBody(position=agent.body.position, velocity=(0.0, 0.0))
            agent.wp_index += 1
            return
        agent.wp_index += 1

    if agent.path is None or agent.wp_index < len(agent.path.nodes):
        return
    # Path exhausted: the goal point itself is reached.
    if agent.goal_kind == "explore" and agent.explore_point is not None:
        agent.nav.visited_base_points.add(agent.explore_point.id)
        _clear_goal(agent)
        if agent.nav.mode == NavMode.EXPLORING:
            _choose_exploration(agent, env, planner)
    elif agent.goal_kind == "clue":
        # Direction clue consumed; resume searching from here.
        agent.nav.mode = NavMode.EXPLORING
        agent.nav.clue_goal = None
        _clear_goal(agent)
        _choose_exploration(agent, env, planner)


def _perceive_and_decide(env, config, agent: _Agent, leg: TaskLeg, thresholds, frustum, kappa,
                         planner: _Planner, logs: RunLogs, t: float, dump):
    pose = CameraPose(floor=agent.floor, position=agent.body.position,
                      eye_height=config.camera.eye_height, heading=agent.heading)
    raster, mask = render_view(env, pose, config.camera)
    sal = attention.saliency_map(raster.pixels)
    sem = attention.semantic_map(mask, env)
    fused = attention.fuse_attention(sal, sem, frustum, config.fusion_weights)
    scores = attention.score_signs(fused, mask, kappa)
    decision = behavior.decide(env, leg, scores, thresholds, agent.id, agent.nav)

    for score in scores:
        threshold = thresholds[(agent.id, score.sign_id)]
        category = behavior.categorize_sign(env.sign_by_id(score.sign_id), leg)
        chosen = decision.chosen_sign == score.sign_id
        logs.sign_event_rows.append((
            logs.replication, agent.id, t, score.sign_id,
            round(score.attention, 6), round(threshold, 6),
            int(score.attention >= threshold), int(category),
            decision.mode.value if chosen else "",
        ))

    if dump is not None:
        dump(logs.replication, agent.id, t, raster, mask, sal, sem, frustum, fused)

    previous_mode = agent.nav.mode
    agent.nav.mode = decision.mode
    if decision.goal is None:
        return
    path = agent.path
    if decision.mode == NavMode.TARGET_KNOWN and (previous_mode != NavMode.TARGET_KNOWN
                                                  or agent.goal != decision.goal):
        path = _set_goal(agent, planner, decision.goal, "target", "target")
    elif decision.mode == NavMode.FOLLOWING_CLUE and decision.chosen_sign is not None:
        goal_id = behavior.clue_goal_id(env.sign_by_id(decision.chosen_sign), leg)
        agent.nav.clue_goal = env.goal_point_by_id(goal_id)
        path = _set_goal(agent, planner, decision.goal, f"clue:{goal_id}", "clue")
    if path is None:
        agent.abort_reason = f"goal {agent.goal_desc} unreachable"


def run_batch(env: Environment, task: Task, config: SimulationConfig,
              replication_order=None, dump=None) -> tuple[dict, list[RunLogs]]:
    """Run all replications and aggregate; execution order never changes output."""
    config.validate()
    grids = build_grids(env, config.cell_size)
    order = list(replication_order) if replication_order is not None else list(range(config.replications))
    if sorted(order) != list(range(config.replications)):
        raise ValueError("replication_order must be a permutation of range(replications)")
    runs = {}
    for rep in order:
        runs[rep] = run_replication(env, task, config, rep, grids=grids, dump=dump)
    all_logs = [runs[rep] for rep in sorted(runs)]
    return aggregate_metrics(env, task, all_logs), all_logs


def aggregate_metrics(env: Environment, task: Task, all_logs: list[RunLogs]) -> dict:
    metrics = [m for logs in all_logs for m in logs.leg_metrics]
    per_leg = {}
    for leg_idx in range(len(task.legs)):
        rows = sorted((m for m in metrics if m.leg == leg_idx),
                      key=lambda m: (m.replication, m.agent))
        completed = [m for m in rows if m.completed]
        times = sorted(m.travel_time for m in completed)
        lengths = sorted(m.path_length for m in completed)
        per_leg[leg_idx] = {
            "attempted": sum(1 for m in rows if m.travel_time is not None),
            "completed": len(completed),
            "completion_rate": len(completed) / len(rows) if rows else 0.0,
            "median_travel_time": _percentile(times, 0.5),
            "p90_travel_time": _percentile(times, 0.9),
            "median_path_length": _percentile(lengths, 0.5),
            "p90_path_length": _percentile(lengths, 0.9),
        }

    events = sorted((row for logs in all_logs for row in logs.sign_event_rows),
                    key=lambda r: (r[0], r[2], r[1], r[3]))
    agent_runs = {(logs.replication, m.agent) for logs in all_logs for m in logs.leg_metrics}
    audit = {}
    for sign in env.signs:
        rows = [r for r in events if r[3] == sign.id]
        seers = {(r[0], r[1]) for r in rows if r[6] == 1}
        audit[sign.id] = {
            "seen_fraction": len(seers) / len(agent_runs) if agent_runs else 0.0,
            "mean_attention_when_visible": (sum(r[4] for r in rows) / len(rows)) if rows else 0.0,
            "decisions_triggered": sum(1 for r in rows if r[8] != ""),
        }
    return {"legs": per_leg, "signs": audit, "agent_runs": len(agent_runs)}


def _percentile(values, q):
    if not values:
        return None
    values = sorted(values)
    idx = q * (len(values) - 1)
    lo = math.floor(idx)
    hi = math.ceil(idx)
    if lo == hi:
        return values[lo]
    return values[lo] + (values[hi] - values[lo]) * (idx - lo)
