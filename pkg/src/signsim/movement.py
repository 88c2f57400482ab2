"""Locomotion layer: regular-grid construction, Theta* any-angle planning with
cross-floor portal routing, and social-force stepping toward waypoints.

Line of sight on the grid uses a supercover traversal, so a segment squeezing
diagonally between two corner-adjacent blocked cells is rejected; the 8-connected
expansions used by the planners forbid the same corner cuts for consistency.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from . import geometry
from .config import SocialForceParams
from .environment import Environment, Floor, Portal

SQRT2 = math.sqrt(2.0)
SNAP_LIMIT = 2.0  # max distance to pull a start/goal into an unblocked cell
_GRAD_DELTA = 1e-3  # finite-difference step for the pedestrian potential


@dataclass(frozen=True)
class NavGrid:
    floor_id: str
    cell_size: float
    origin: tuple[float, float]
    width: int
    height: int
    blocked: np.ndarray  # (height, width) bool

    def cell_of(self, point: tuple[float, float]) -> tuple[int, int]:
        ix = int((point[0] - self.origin[0]) // self.cell_size)
        iy = int((point[1] - self.origin[1]) // self.cell_size)
        return (min(max(ix, 0), self.width - 1), min(max(iy, 0), self.height - 1))

    def center_of(self, cell: tuple[int, int]) -> tuple[float, float]:
        return (self.origin[0] + (cell[0] + 0.5) * self.cell_size,
                self.origin[1] + (cell[1] + 0.5) * self.cell_size)

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_blocked(self, cell: tuple[int, int]) -> bool:
        return bool(self.blocked[cell[1], cell[0]])


@dataclass(frozen=True)
class PathNode:
    floor: str
    point: tuple[float, float]
    enter_portal: Portal | None = None  # traverse after reaching this node


@dataclass(frozen=True)
class PlannedPath:
    nodes: tuple[PathNode, ...]
    total_length: float  # meters; portal hops count traversal_time * desired_speed


def build_nav_grid(floor: Floor, cell_size: float = 0.5) -> NavGrid:
    """Blocked iff the cell intersects an obstacle or is not fully inside the outline."""
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    xmin, ymin, xmax, ymax = floor.bounds()
    if xmax - xmin <= 0 or ymax - ymin <= 0:
        raise ValueError(f"degenerate outline on floor {floor.id!r}")
    width = max(1, math.ceil((xmax - xmin) / cell_size - 1e-9))
    height = max(1, math.ceil((ymax - ymin) / cell_size - 1e-9))
    blocked = np.zeros((height, width), dtype=bool)
    for iy in range(height):
        for ix in range(width):
            rect = (xmin + ix * cell_size, ymin + iy * cell_size,
                    xmin + (ix + 1) * cell_size, ymin + (iy + 1) * cell_size)
            if not geometry.rect_inside_polygon(rect, floor.outline):
                blocked[iy, ix] = True
                continue
            for obs in floor.obstacles:
                if geometry.rect_intersects_polygon(rect, obs):
                    blocked[iy, ix] = True
                    break
    return NavGrid(floor_id=floor.id, cell_size=cell_size, origin=(xmin, ymin),
                   width=width, height=height, blocked=blocked)


def supercover_cells(a: tuple[int, int], b: tuple[int, int]):
    """Every cell touched by the segment between two cell centers.

    At an exact corner crossing both side cells are yielded, which makes the
    traversal conservative: no sight through gaps a body cannot pass.
    """
    x, y = a
    x1, y1 = b
    dx, dy = x1 - x, y1 - y
    nx, ny = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    yield (x, y)
    ix = iy = 0
    while ix < nx or iy < ny:
        decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx
        if decision == 0:
            yield (x + sx, y)
            yield (x, y + sy)
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif decision < 0:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        yield (x, y)


def grid_line_of_sight(grid: NavGrid, a: tuple[int, int], b: tuple[int, int]) -> bool:
    blocked = grid.blocked
    for cx, cy in supercover_cells(a, b):
        if blocked[cy, cx]:
            return False
    return True


_NEIGHBOR_STEPS = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
                   (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))


def _neighbors(grid: NavGrid, cell: tuple[int, int]):
    x, y = cell
    for dx, dy, cost in _NEIGHBOR_STEPS:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < grid.width and 0 <= ny < grid.height):
            continue
        if grid.blocked[ny, nx]:
            continue
        # No corner cutting: a diagonal needs both orthogonal cells free.
        if dx != 0 and dy != 0 and (grid.blocked[y, nx] or grid.blocked[ny, x]):
            continue
        yield (nx, ny), cost


def _dist(a: tuple[int, int], b: tuple[int, int]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _refine_chain(grid: NavGrid, chain: list[tuple[int, int]], max_rounds: int = 50) -> list[tuple[int, int]]:
    """Shorten a waypoint chain in place: drop bends that line of sight can skip
    and slide the remaining bends to cheaper neighboring cells."""
    chain = list(chain)
    for _ in range(max_rounds):
        improved = False
        i = 1
        while i < len(chain) - 1:
            if grid_line_of_sight(grid, chain[i - 1], chain[i + 1]):
                del chain[i]
                improved = True
            else:
                i += 1
        for i in range(1, len(chain) - 1):
            a, w, b = chain[i - 1], chain[i], chain[i + 1]
            best = w
            best_len = _dist(a, w) + _dist(w, b)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    cand = (w[0] + dx, w[1] + dy)
                    if not grid.in_bounds(cand) or grid.is_blocked(cand):
                        continue
                    length = _dist(a, cand) + _dist(cand, b)
                    if (length < best_len - 1e-12
                            and grid_line_of_sight(grid, a, cand)
                            and grid_line_of_sight(grid, cand, b)):
                        best = cand
                        best_len = length
            if best != chain[i]:
                chain[i] = best
                improved = True
        if not improved:
            break
    return chain


def theta_star(grid: NavGrid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]] | None:
    """Any-angle plan between cells; returns the bend cells or None if unreachable.

    This is Theta* (8-connected expansion, Euclidean g and h, parent shortcut
    when the parent has line of sight to the neighbor, f-ties broken by larger
    g) hardened for path quality: shortcuts may anchor on any ancestor of the
    expanding node or on parents already assigned around the neighbor, nodes
    reopen when a shorter route reaches them, and the search drains until no
    open node can beat the goal. A greedy bend-refinement pass runs at the end.
    """
    if grid.is_blocked(start) or grid.is_blocked(goal):
        return None
    if start == goal:
        return [start]
    g = {start: 0.0}
    parent = {start: start}
    counter = 0
    open_heap = [(_dist(start, goal), 0.0, counter, start)]
    closed = set()
    while open_heap:
        f, _, _, s = heapq.heappop(open_heap)
        # The parent shortcut makes the heuristic inconsistent; the first pop
        # of the goal is not necessarily the best route.
        if f >= g.get(goal, math.inf) - 1e-12:
            break
        if s in closed:
            continue
        closed.add(s)
        ancestors = []
        node = s
        while parent[node] != node:
            ancestors.append(parent[node])
            node = parent[node]
        for nxt, step_cost in _neighbors(grid, s):
            anchors = list(ancestors)
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    nb = (nxt[0] + dx, nxt[1] + dy)
                    if nb in parent:
                        anchors.append(parent[nb])
            cand_g = g[s] + step_cost
            cand_parent = s
            for anchor in dict.fromkeys(anchors):
                via = g[anchor] + _dist(anchor, nxt)
                if via < cand_g - 1e-12 and grid_line_of_sight(grid, anchor, nxt):
                    cand_g = via
                    cand_parent = anchor
            if cand_g < g.get(nxt, math.inf) - 1e-12:
                g[nxt] = cand_g
                parent[nxt] = cand_parent
                closed.discard(nxt)
                counter += 1
                heapq.heappush(open_heap, (cand_g + _dist(nxt, goal), -cand_g, counter, nxt))
    if goal not in g:
        return None
    chain = [goal]
    while parent[chain[-1]] != chain[-1]:
        chain.append(parent[chain[-1]])
    return _refine_chain(grid, chain[::-1])


def plan_grid_path(grid: NavGrid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]] | None:
    """Best Theta* chain between cells, searching both directions.

    Greedy parent assignment is direction-sensitive: the reverse search
    occasionally finds a different (shorter) route around an obstacle cluster,
    so take the better of the two.
    """
    if start == goal or grid_line_of_sight(grid, start, goal):
        if grid.is_blocked(start) or grid.is_blocked(goal):
            return None
        return [start, goal] if start != goal else [start]
    forward = theta_star(grid, start, goal)
    if forward is None:
        return None
    backward = theta_star(grid, goal, start)
    candidates = [forward]
    if backward is not None:
        candidates.append(_refine_chain(grid, backward[::-1]))
    return min(candidates,
               key=lambda ch: sum(_dist(a, b) for a, b in zip(ch, ch[1:])))


def astar_grid(grid: NavGrid, start: tuple[int, int], goal: tuple[int, int]) -> float | None:
    """Plain 8-connected A* path length (same corner-cut rule); None if unreachable."""
    if grid.is_blocked(start) or grid.is_blocked(goal):
        return None
    g = {start: 0.0}
    open_heap = [(_dist(start, goal), 0, start)]
    closed = set()
    counter = 0
    while open_heap:
        _, _, s = heapq.heappop(open_heap)
        if s == goal:
            return g[s]
        if s in closed:
            continue
        closed.add(s)
        for nxt, step_cost in _neighbors(grid, s):
            cand = g[s] + step_cost
            if cand < g.get(nxt, math.inf) - 1e-12:
                g[nxt] = cand
                counter += 1
                heapq.heappush(open_heap, (cand + _dist(nxt, goal), counter, nxt))
    return None


def snap_to_unblocked(grid: NavGrid, point: tuple[float, float],
                      limit: float = SNAP_LIMIT) -> tuple[int, int] | None:
    """Cell of the point, or the nearest unblocked cell center within `limit`."""
    cell = grid.cell_of(point)
    if not grid.is_blocked(cell):
        return cell
    best = None
    best_d = limit
    reach = int(math.ceil(limit / grid.cell_size)) + 1
    for iy in range(max(0, cell[1] - reach), min(grid.height, cell[1] + reach + 1)):
        for ix in range(max(0, cell[0] - reach), min(grid.width, cell[0] + reach + 1)):
            if grid.blocked[iy, ix]:
                continue
            cx, cy = grid.center_of((ix, iy))
            d = math.hypot(cx - point[0], cy - point[1])
            if d <= best_d:
                if best is None or d < best_d or (ix, iy) < best:
                    best = (ix, iy)
                    best_d = d
    return best


def _floor_segment(grid: NavGrid, start: tuple[float, float],
                   goal: tuple[float, float]) -> tuple[list[tuple[float, float]], float] | None:
    """Theta* between two points on one floor; returns (waypoints, length)."""
    start_cell = snap_to_unblocked(grid, start)
    goal_cell = snap_to_unblocked(grid, goal)
    if start_cell is None or goal_cell is None:
        return None
    chain = plan_grid_path(grid, start_cell, goal_cell)
    if chain is None:
        return None
    points = [start] + [grid.center_of(c) for c in chain[1:-1]] + [goal]
    # Drop zero-length duplicates that appear when start/goal share a bend cell.
    cleaned = [points[0]]
    for p in points[1:]:
        if math.hypot(p[0] - cleaned[-1][0], p[1] - cleaned[-1][1]) > 1e-9:
            cleaned.append(p)
    length = sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(cleaned, cleaned[1:]))
    return cleaned, length


def plan_path(grids: dict[str, NavGrid], portals: tuple[Portal, ...],
              start: tuple[str, tuple[float, float]], goal: tuple[str, tuple[float, float]],
              desired_speed: float) -> PlannedPath | None:
    """Quickest path, possibly through portals; None when the goal is unreachable.

    Portal hops contribute traversal_time * desired_speed as equivalent length
    so that length ranking equals time ranking at uniform walking speed.
    """
    start_floor, start_pt = start
    goal_floor, goal_pt = goal
    if start_floor == goal_floor and math.hypot(start_pt[0] - goal_pt[0], start_pt[1] - goal_pt[1]) <= 1e-9:
        return PlannedPath(nodes=(), total_length=0.0)

    # Graph nodes: START, GOAL, and each portal endpoint.
    nodes: dict = {"START": (start_floor, start_pt), "GOAL": (goal_floor, goal_pt)}
    for p in portals:
        nodes[(p.id, "a")] = (p.floor_a, p.point_a)
        nodes[(p.id, "b")] = (p.floor_b, p.point_b)

    segment_cache: dict = {}

    def floor_edge(u, v):
        fu, pu = nodes[u]
        fv, pv = nodes[v]
        if fu != fv:
            return None
        key = (fu, pu, pv)
        if key not in segment_cache:
            segment_cache[key] = _floor_segment(grids[fu], pu, pv)
        return segment_cache[key]

    def edges(u):
        out = []
        for v in nodes:
            if v == u:
                continue
            seg = floor_edge(u, v)
            if seg is not None:
                out.append((v, seg[1], None))
        if isinstance(u, tuple):
            pid, side = u
            other = (pid, "b" if side == "a" else "a")
            portal = next(p for p in portals if p.id == pid)
            out.append((other, portal.traversal_time * desired_speed, portal))
        return out

    dist = {"START": 0.0}
    prev: dict = {}
    heap = [(0.0, 0, "START")]
    counter = 0
    settled = set()
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u == "GOAL":
            break
        for v, w, portal in edges(u):
            nd = d + w
            if nd < dist.get(v, math.inf) - 1e-12:
                dist[v] = nd
                prev[v] = (u, portal)
                counter += 1
                heapq.heappush(heap, (nd, counter, v))
    if "GOAL" not in settled:
        return None

    # Reconstruct hop sequence, then expand each floor segment.
    hops = ["GOAL"]
    while hops[-1] != "START":
        hops.append(prev[hops[-1]][0])
    hops.reverse()

    path_nodes: list[PathNode] = []
    total = 0.0
    for u, v in zip(hops, hops[1:]):
        portal = prev[v][1]
        fu, pu = nodes[u]
        fv, pv = nodes[v]
        if portal is not None:
            if path_nodes:
                path_nodes[-1] = replace(path_nodes[-1], enter_portal=portal)
            else:
                path_nodes.append(PathNode(floor=fu, point=pu, enter_portal=portal))
            path_nodes.append(PathNode(floor=fv, point=pv))
            total += portal.traversal_time * desired_speed
        else:
            seg = floor_edge(u, v)
            points, length = seg
            total += length
            start_idx = 1 if path_nodes and path_nodes[-1].point == points[0] else 0
            for pt in points[start_idx:]:
                path_nodes.append(PathNode(floor=fu, point=pt))
    if not path_nodes:
        path_nodes = [PathNode(floor=start_floor, point=start_pt)]
    return PlannedPath(nodes=tuple(path_nodes), total_length=total)


# --- social forces -----------------------------------------------------------

@dataclass(frozen=True)
class AgentBody:
    position: tuple[float, float]
    velocity: tuple[float, float]


def _ped_potential(dx, dy, vb: float, ebx: float, eby: float, params: SocialForceParams):
    """Helbing-Molnar elliptical potential of one neighbor, vectorized over d."""
    step = vb * params.step_lookahead
    shift_x = dx - step * ebx
    shift_y = dy - step * eby
    term = (np.hypot(dx, dy) + np.hypot(shift_x, shift_y)) ** 2 - step**2
    b = 0.5 * np.sqrt(np.maximum(term, 0.0))
    return params.ped_strength * np.exp(-b / params.ped_range)


def pedestrian_force(position, desired_dir, neighbors, params: SocialForceParams):
    """Sum of repulsions from neighbor bodies, with field-of-view anisotropy.

    `neighbors` is a sequence of AgentBody; gradients use central differences.
    """
    if not neighbors:
        return np.zeros(2)
    pos = np.asarray(position)
    npos = np.array([n.position for n in neighbors])
    nvel = np.array([n.velocity for n in neighbors])
    speeds = np.hypot(nvel[:, 0], nvel[:, 1])
    with np.errstate(invalid="ignore"):
        ndir = np.where(speeds[:, None] > 1e-9, nvel / np.maximum(speeds, 1e-12)[:, None], 0.0)
    dx = pos[0] - npos[:, 0]
    dy = pos[1] - npos[:, 1]
    delta = _GRAD_DELTA
    fx = -(_ped_potential(dx + delta, dy, speeds, ndir[:, 0], ndir[:, 1], params)
           - _ped_potential(dx - delta, dy, speeds, ndir[:, 0], ndir[:, 1], params)) / (2 * delta)
    fy = -(_ped_potential(dx, dy + delta, speeds, ndir[:, 0], ndir[:, 1], params)
           - _ped_potential(dx, dy - delta, speeds, ndir[:, 0], ndir[:, 1], params)) / (2 * delta)
    # Scale down influences coming from outside the view cone ahead.
    toward = np.stack([-dx, -dy], axis=1)
    toward_norm = np.hypot(toward[:, 0], toward[:, 1])
    cos_phi = math.cos(math.radians(params.fov_half_angle))
    ex, ey = desired_dir
    in_view = (toward[:, 0] * ex + toward[:, 1] * ey) >= toward_norm * cos_phi
    weight = np.where(in_view, 1.0, params.anisotropy)
    return np.array([np.sum(weight * fx), np.sum(weight * fy)])


def wall_force(position, segments_a: np.ndarray, segments_b: np.ndarray, params: SocialForceParams):
    """Exponential repulsion from the nearest point of each wall segment."""
    if len(segments_a) == 0:
        return np.zeros(2)
    p = np.asarray(position)
    ab = segments_b - segments_a
    denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-12)
    t = np.clip(np.einsum("ij,ij->i", p[None, :] - segments_a, ab) / denom, 0.0, 1.0)
    nearest = segments_a + t[:, None] * ab
    away = p[None, :] - nearest
    w = np.hypot(away[:, 0], away[:, 1])
    safe_w = np.maximum(w, 1e-9)
    magnitude = (params.wall_strength / params.wall_range) * np.exp(-w / params.wall_range)
    force = (magnitude / safe_w)[:, None] * away
    return force.sum(axis=0)


def resolve_wall_collisions(position, velocity, segments_a, segments_b, radius: float):
    """Push the body out of any wall it penetrates, sliding along the tangent."""
    pos = np.asarray(position, dtype=float).copy()
    vel = np.asarray(velocity, dtype=float).copy()
    if len(segments_a) == 0:
        return pos, vel
    for _ in range(4):
        ab = segments_b - segments_a
        denom = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-12)
        t = np.clip(np.einsum("ij,ij->i", pos[None, :] - segments_a, ab) / denom, 0.0, 1.0)
        nearest = segments_a + t[:, None] * ab
        away = pos[None, :] - nearest
        dists = np.hypot(away[:, 0], away[:, 1])
        idx = int(np.argmin(dists))
        if dists[idx] >= radius - 1e-9:
            break
        d = dists[idx]
        if d < 1e-9:
            seg = ab[idx]
            seg_len = math.hypot(seg[0], seg[1])
            normal = np.array([-seg[1], seg[0]]) / max(seg_len, 1e-12)
            if np.dot(normal, vel) > 0:
                normal = -normal
        else:
            normal = away[idx] / d
        pos = nearest[idx] + normal * radius
        # Sliding: remove the into-wall velocity component.
        into = np.dot(vel, -normal)
        if into > 0:
            vel = vel + normal * into
    return pos, vel


def social_force_step(body: AgentBody, neighbors, walls, waypoint,
                      params: SocialForceParams, dt: float) -> AgentBody:
    """One explicit-Euler step of the social force model toward a waypoint.

    `walls` is a (A, B) pair of (N, 2) arrays of segment endpoints; `waypoint`
    may be None to coast (driving term decays current velocity).
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError(f"dt must be in (0, 0.1], got {dt}")
    pos = np.asarray(body.position, dtype=float)
    vel = np.asarray(body.velocity, dtype=float)
    if waypoint is None:
        e = np.zeros(2)
    else:
        to_wp = np.asarray(waypoint) - pos
        dist = math.hypot(to_wp[0], to_wp[1])
        e = to_wp / dist if dist > 1e-9 else np.zeros(2)
    accel = (params.desired_speed * e - vel) / params.relaxation_time
    accel = accel + pedestrian_force(pos, e, neighbors, params)
    seg_a, seg_b = walls if walls is not None else (np.empty((0, 2)), np.empty((0, 2)))
    accel = accel + wall_force(pos, seg_a, seg_b, params)

    vel = vel + accel * dt
    speed = math.hypot(vel[0], vel[1])
    if speed > params.max_speed:
        vel = vel * (params.max_speed / speed)
    pos = pos + vel * dt
    pos, vel = resolve_wall_collisions(pos, vel, seg_a, seg_b, params.body_radius)
    return AgentBody(position=(float(pos[0]), float(pos[1])), velocity=(float(vel[0]), float(vel[1])))
