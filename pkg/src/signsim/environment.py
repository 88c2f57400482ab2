"""Scenario data model: floors, portals, signs, tasks, and coarse geometric queries.

The environment is immutable after loading, so any number of simulation
workers can read it concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from . import geometry
from .config import SimulationConfig, config_from_dict, config_to_dict

OBJECT_CLASSES = ("signage", "schedule", "infrastructure")
PORTAL_KINDS = ("stairs", "escalator", "elevator")


class ScenarioError(Exception):
    """Base class for scenario loading failures."""


class ScenarioParseError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class NamedPoint:
    id: str
    floor: str
    point: tuple[float, float]


@dataclass(frozen=True)
class Floor:
    id: str
    outline: tuple[tuple[float, float], ...]
    obstacles: tuple[tuple[tuple[float, float], ...], ...] = ()
    elevation: float = 0.0

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.outline]
        ys = [p[1] for p in self.outline]
        return min(xs), min(ys), max(xs), max(ys)

    def wall_segments(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        segs = list(geometry.polygon_edges(self.outline))
        for obs in self.obstacles:
            segs.extend(geometry.polygon_edges(obs))
        return segs

    def contains(self, p: tuple[float, float]) -> bool:
        """Walkable containment: inside the outline, not strictly inside an obstacle."""
        if not geometry.point_in_polygon(p, self.outline):
            return False
        return not any(geometry.point_strictly_in_polygon(p, obs) for obs in self.obstacles)


@dataclass(frozen=True)
class Portal:
    id: str
    floor_a: str
    floor_b: str
    point_a: tuple[float, float]
    point_b: tuple[float, float]
    traversal_time: float
    kind: str = "stairs"


@dataclass(frozen=True)
class SignEntry:
    label: str
    action: str  # "at_target" | "direct_to"
    goal: str | None = None  # goal point id for direct_to


@dataclass(frozen=True)
class Sign:
    id: int
    floor: str
    center: tuple[float, float, float]  # x, y, z above floor
    normal: tuple[float, float]  # unit facing direction
    width: float
    height: float
    face_color: tuple[float, float, float] = (1.0, 1.0, 1.0)
    object_class: str = "signage"
    entries: tuple[SignEntry, ...] = ()

    @property
    def position(self) -> tuple[float, float]:
        return (self.center[0], self.center[1])


@dataclass(frozen=True)
class SemanticModel:
    relevance: dict[str, float] = field(
        default_factory=lambda: {"signage": 1.0, "schedule": 0.8, "infrastructure": 0.6}
    )
    background_relevance: float = 0.05


@dataclass(frozen=True)
class TaskLeg:
    target_label: str
    target_point: tuple[float, float]
    target_floor: str
    arrival_radius: float = 1.5
    start: str | None = None  # base point id; None = previous leg's end


@dataclass(frozen=True)
class Task:
    legs: tuple[TaskLeg, ...]


@dataclass(frozen=True)
class Environment:
    floors: tuple[Floor, ...]
    portals: tuple[Portal, ...] = ()
    signs: tuple[Sign, ...] = ()
    base_points: tuple[NamedPoint, ...] = ()
    goal_points: tuple[NamedPoint, ...] = ()
    semantic_model: SemanticModel = field(default_factory=SemanticModel)

    def floor_by_id(self, floor_id: str) -> Floor:
        for f in self.floors:
            if f.id == floor_id:
                return f
        raise KeyError(f"unknown floor {floor_id!r}")

    def sign_by_id(self, sign_id: int) -> Sign:
        for s in self.signs:
            if s.id == sign_id:
                return s
        raise KeyError(f"unknown sign id {sign_id}")

    def goal_point_by_id(self, goal_id: str) -> NamedPoint:
        for g in self.goal_points:
            if g.id == goal_id:
                return g
        raise KeyError(f"unknown goal point {goal_id!r}")

    def signs_on_floor(self, floor_id: str) -> list[Sign]:
        return [s for s in self.signs if s.floor == floor_id]


def line_of_sight(env: Environment, floor_id: str, p: tuple[float, float], q: tuple[float, float]) -> bool:
    """True iff segment pq stays inside the floor outline and crosses no obstacle."""
    floor = env.floor_by_id(floor_id)
    if not geometry.segment_stays_inside(p, q, floor.outline):
        return False
    for obs in floor.obstacles:
        if geometry.point_strictly_in_polygon(p, obs) or geometry.point_strictly_in_polygon(q, obs):
            return False
        if geometry.segment_crosses_polygon(p, q, obs):
            return False
    return True


def candidate_signs(env: Environment, pose, max_distance: float) -> list[int]:
    """Signs on the pose's floor that are near, ahead, front-facing, and unoccluded.

    `pose` needs .floor, .position and .heading attributes (see perception.CameraPose).
    """
    px, py = pose.position
    hx, hy = pose.heading
    out = []
    for sign in env.signs_on_floor(pose.floor):
        sx, sy = sign.position
        dx, dy = sx - px, sy - py
        if math.hypot(dx, dy) > max_distance:
            continue
        if dx * hx + dy * hy <= 0.0:  # behind the camera plane
            continue
        if sign.normal[0] * dx + sign.normal[1] * dy >= 0.0:  # back side
            continue
        if not line_of_sight(env, pose.floor, (px, py), (sx, sy)):
            continue
        out.append(sign.id)
    return out


# --- scenario file handling -------------------------------------------------

def _require(data: dict, key: str, path: str):
    if key not in data:
        raise ScenarioValidationError(path, f"missing required key {key!r}")
    return data[key]


def _as_point(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioValidationError(path, f"expected [x, y], got {value!r}")
    return (float(value[0]), float(value[1]))


def _as_polygon(value, path: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, (list, tuple)) or len(value) < 3:
        raise ScenarioValidationError(path, "polygon needs at least 3 [x, y] vertices")
    pts = tuple(_as_point(v, f"{path}[{i}]") for i, v in enumerate(value))
    if not geometry.is_simple_polygon(pts):
        raise ScenarioValidationError(path, "polygon is degenerate or self-intersecting")
    return tuple(geometry.ensure_ccw(pts))


def _parse_floor(data: dict, path: str) -> Floor:
    outline = _as_polygon(_require(data, "outline", path), f"{path}.outline")
    obstacles = []
    for i, obs in enumerate(data.get("obstacles", [])):
        poly = _as_polygon(obs, f"{path}.obstacles[{i}]")
        obstacles.append(poly)
    floor = Floor(
        id=str(_require(data, "id", path)),
        outline=outline,
        obstacles=tuple(obstacles),
        elevation=float(data.get("elevation", 0.0)),
    )
    for i, obs in enumerate(floor.obstacles):
        for j, v in enumerate(obs):
            if not geometry.point_in_polygon(v, floor.outline):
                raise ScenarioValidationError(
                    f"{path}.obstacles[{i}]", f"vertex {j} at {v} lies outside the floor outline"
                )
    return floor


def _parse_sign(data: dict, path: str) -> Sign:
    sid = _require(data, "id", path)
    if not isinstance(sid, int) or sid <= 0:
        raise ScenarioValidationError(f"{path}.id", f"sign id must be a positive integer, got {sid!r}")
    center = _require(data, "center", path)
    if not isinstance(center, (list, tuple)) or len(center) != 3:
        raise ScenarioValidationError(f"{path}.center", f"expected [x, y, z], got {center!r}")
    facing = float(_require(data, "facing_deg", path))
    rad = math.radians(facing)
    width = float(_require(data, "width", path))
    height = float(_require(data, "height", path))
    if width <= 0 or height <= 0:
        raise ScenarioValidationError(path, "sign width and height must be positive")
    obj_class = data.get("class", "signage")
    if obj_class not in OBJECT_CLASSES:
        raise ScenarioValidationError(f"{path}.class", f"unknown object class {obj_class!r}")
    color = data.get("color", [1.0, 1.0, 1.0])
    if len(color) != 3 or not all(0.0 <= float(c) <= 1.0 for c in color):
        raise ScenarioValidationError(f"{path}.color", f"color must be [r, g, b] in [0, 1], got {color!r}")
    entries = []
    for i, ent in enumerate(data.get("entries", [])):
        epath = f"{path}.entries[{i}]"
        label = str(_require(ent, "label", epath))
        if not label:
            raise ScenarioValidationError(epath, "entry label must be non-empty")
        action = _require(ent, "action", epath)
        if action == "at_target":
            entries.append(SignEntry(label=label, action="at_target"))
        elif action == "direct_to":
            entries.append(SignEntry(label=label, action="direct_to", goal=str(_require(ent, "goal", epath))))
        else:
            raise ScenarioValidationError(f"{epath}.action", f"must be 'at_target' or 'direct_to', got {action!r}")
    return Sign(
        id=sid,
        floor=str(_require(data, "floor", path)),
        center=(float(center[0]), float(center[1]), float(center[2])),
        normal=(math.cos(rad), math.sin(rad)),
        width=width,
        height=height,
        face_color=tuple(float(c) for c in color),
        object_class=obj_class,
        entries=tuple(entries),
    )


def _parse_named_point(data: dict, path: str) -> NamedPoint:
    return NamedPoint(
        id=str(_require(data, "id", path)),
        floor=str(_require(data, "floor", path)),
        point=_as_point(_require(data, "point", path), f"{path}.point"),
    )


def _parse_task(data: dict, path: str) -> Task:
    legs_data = _require(data, "legs", path)
    if not isinstance(legs_data, list) or not legs_data:
        raise ScenarioValidationError(f"{path}.legs", "task needs at least one leg")
    legs = []
    for i, leg in enumerate(legs_data):
        lpath = f"{path}.legs[{i}]"
        label = str(_require(leg, "target_label", lpath))
        if not label:
            raise ScenarioValidationError(lpath, "target_label must be non-empty")
        radius = float(leg.get("arrival_radius", 1.5))
        if radius <= 0:
            raise ScenarioValidationError(lpath, "arrival_radius must be positive")
        start = leg.get("start")
        if i == 0 and start is None:
            raise ScenarioValidationError(lpath, "the first leg must name a start base point")
        legs.append(TaskLeg(
            target_label=label,
            target_point=_as_point(_require(leg, "target", lpath), f"{lpath}.target"),
            target_floor=str(_require(leg, "floor", lpath)),
            arrival_radius=radius,
            start=None if start is None else str(start),
        ))
    return Task(legs=tuple(legs))


def _parse_semantic_model(data: dict | None, path: str) -> SemanticModel:
    if data is None:
        return SemanticModel()
    relevance = dict(SemanticModel().relevance)
    for cls, value in data.get("relevance", {}).items():
        if cls not in OBJECT_CLASSES:
            raise ScenarioValidationError(f"{path}.relevance", f"unknown object class {cls!r}")
        relevance[cls] = float(value)
    background = float(data.get("background", 0.05))
    model = SemanticModel(relevance=relevance, background_relevance=background)
    for cls, value in model.relevance.items():
        if not 0.0 <= value <= 1.0:
            raise ScenarioValidationError(f"{path}.relevance.{cls}", f"relevance {value} outside [0, 1]")
    if not 0.0 <= model.background_relevance <= 1.0:
        raise ScenarioValidationError(f"{path}.background", "background relevance outside [0, 1]")
    return model


def _check_unique(ids: Iterable, kind: str, path: str) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise ScenarioValidationError(path, f"duplicate {kind} id {i!r}")
        seen.add(i)


def _validate_environment(env: Environment, task: Task) -> None:
    _check_unique((f.id for f in env.floors), "floor", "floors")
    _check_unique((s.id for s in env.signs), "sign", "signs")
    _check_unique((p.id for p in env.portals), "portal", "portals")
    _check_unique((p.id for p in list(env.base_points) + list(env.goal_points)), "named point",
                  "base_points/goal_points")
    floor_ids = {f.id for f in env.floors}
    goal_ids = {g.id for g in env.goal_points}
    base_ids = {b.id for b in env.base_points}

    for i, portal in enumerate(env.portals):
        path = f"portals[{i}]"
        if portal.traversal_time <= 0:
            raise ScenarioValidationError(path, "traversal_time must be positive")
        if portal.kind not in PORTAL_KINDS:
            raise ScenarioValidationError(path, f"unknown portal kind {portal.kind!r}")
        for side, fid, pt in (("a", portal.floor_a, portal.point_a), ("b", portal.floor_b, portal.point_b)):
            if fid not in floor_ids:
                raise ScenarioValidationError(f"{path}.floor_{side}", f"unknown floor {fid!r}")
            if not env.floor_by_id(fid).contains(pt):
                raise ScenarioValidationError(f"{path}.point_{side}", f"portal endpoint {pt} is not walkable")

    for kind, points in (("base_points", env.base_points), ("goal_points", env.goal_points)):
        for i, np_ in enumerate(points):
            path = f"{kind}[{i}]"
            if np_.floor not in floor_ids:
                raise ScenarioValidationError(f"{path}.floor", f"unknown floor {np_.floor!r}")
            if not env.floor_by_id(np_.floor).contains(np_.point):
                raise ScenarioValidationError(f"{path}.point",
                                              f"point {np_.point} of {np_.id!r} is not inside the walkable region")

    for i, sign in enumerate(env.signs):
        path = f"signs[{i}]"
        if sign.floor not in floor_ids:
            raise ScenarioValidationError(f"{path}.floor", f"unknown floor {sign.floor!r} on sign {sign.id}")
        floor = env.floor_by_id(sign.floor)
        pos = sign.position
        if not geometry.point_in_polygon(pos, floor.outline):
            raise ScenarioValidationError(path, f"sign {sign.id} center {pos} lies outside the floor outline")
        # Wall-mounted signs may rest on an obstacle face but not inside it.
        for j, obs in enumerate(floor.obstacles):
            if geometry.point_strictly_in_polygon(pos, obs):
                raise ScenarioValidationError(path, f"sign {sign.id} center {pos} is buried in obstacle {j}")
        for j, entry in enumerate(sign.entries):
            if entry.action == "direct_to" and entry.goal not in goal_ids:
                raise ScenarioValidationError(f"{path}.entries[{j}].goal",
                                              f"sign {sign.id} references unknown goal point {entry.goal!r}")

    for i, leg in enumerate(task.legs):
        path = f"task.legs[{i}]"
        if leg.target_floor not in floor_ids:
            raise ScenarioValidationError(f"{path}.floor", f"unknown floor {leg.target_floor!r}")
        if not env.floor_by_id(leg.target_floor).contains(leg.target_point):
            raise ScenarioValidationError(f"{path}.target", f"target {leg.target_point} is not walkable")
        if leg.start is not None and leg.start not in base_ids:
            raise ScenarioValidationError(f"{path}.start", f"unknown base point {leg.start!r}")


def load_scenario(text: str) -> tuple[Environment, Task, SimulationConfig]:
    """Parse and fully validate a scenario JSON document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario document must be a JSON object")

    floors_data = _require(data, "floors", "document")
    if not isinstance(floors_data, list) or not floors_data:
        raise ScenarioValidationError("floors", "at least one floor is required")
    floors = tuple(_parse_floor(f, f"floors[{i}]") for i, f in enumerate(floors_data))

    portals = []
    for i, p in enumerate(data.get("portals", [])):
        path = f"portals[{i}]"
        portals.append(Portal(
            id=str(_require(p, "id", path)),
            floor_a=str(_require(p, "floor_a", path)),
            floor_b=str(_require(p, "floor_b", path)),
            point_a=_as_point(_require(p, "point_a", path), f"{path}.point_a"),
            point_b=_as_point(_require(p, "point_b", path), f"{path}.point_b"),
            traversal_time=float(_require(p, "traversal_time", path)),
            kind=str(p.get("kind", "stairs")),
        ))

    signs = tuple(_parse_sign(s, f"signs[{i}]") for i, s in enumerate(data.get("signs", [])))
    base_points = tuple(_parse_named_point(b, f"base_points[{i}]")
                        for i, b in enumerate(data.get("base_points", [])))
    goal_points = tuple(_parse_named_point(g, f"goal_points[{i}]")
                        for i, g in enumerate(data.get("goal_points", [])))
    semantic = _parse_semantic_model(data.get("semantic_model"), "semantic_model")
    task = _parse_task(_require(data, "task", "document"), "task")
    try:
        cfg = config_from_dict(data.get("config"))
    except (ValueError, TypeError) as exc:
        raise ScenarioValidationError("config", str(exc)) from exc

    env = Environment(
        floors=floors,
        portals=tuple(portals),
        signs=signs,
        base_points=base_points,
        goal_points=goal_points,
        semantic_model=semantic,
    )
    _validate_environment(env, task)
    if not env.base_points:
        raise ScenarioValidationError("base_points", "at least one base point is required for exploration")
    return env, task, cfg


def load_scenario_file(path) -> tuple[Environment, Task, SimulationConfig]:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def scenario_to_dict(env: Environment, task: Task, cfg: SimulationConfig) -> dict:
    """Inverse of load_scenario, for round-trip stability."""
    return {
        "floors": [
            {
                "id": f.id,
                "elevation": f.elevation,
                "outline": [list(p) for p in f.outline],
                "obstacles": [[list(p) for p in obs] for obs in f.obstacles],
            }
            for f in env.floors
        ],
        "portals": [
            {
                "id": p.id, "floor_a": p.floor_a, "floor_b": p.floor_b,
                "point_a": list(p.point_a), "point_b": list(p.point_b),
                "traversal_time": p.traversal_time, "kind": p.kind,
            }
            for p in env.portals
        ],
        "signs": [
            {
                "id": s.id, "floor": s.floor, "center": list(s.center),
                "facing_deg": math.degrees(math.atan2(s.normal[1], s.normal[0])),
                "width": s.width, "height": s.height, "color": list(s.face_color),
                "class": s.object_class,
                "entries": [
                    {"label": e.label, "action": e.action, **({"goal": e.goal} if e.goal else {})}
                    for e in s.entries
                ],
            }
            for s in env.signs
        ],
        "base_points": [{"id": b.id, "floor": b.floor, "point": list(b.point)} for b in env.base_points],
        "goal_points": [{"id": g.id, "floor": g.floor, "point": list(g.point)} for g in env.goal_points],
        "semantic_model": {
            "relevance": dict(env.semantic_model.relevance),
            "background": env.semantic_model.background_relevance,
        },
        "task": {
            "legs": [
                {
                    "target_label": leg.target_label,
                    "target": list(leg.target_point),
                    "floor": leg.target_floor,
                    "arrival_radius": leg.arrival_radius,
                    **({"start": leg.start} if leg.start is not None else {}),
                }
                for leg in task.legs
            ]
        },
        "config": config_to_dict(cfg),
    }
