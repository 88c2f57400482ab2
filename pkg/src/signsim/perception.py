"""Synthetic first-person rendering: color raster plus per-pixel sign-ID mask.

A pinhole camera at eye height looks along the agent's heading (pitch fixed at
zero). Every surface is rasterized by per-pixel ray/plane intersection with a
depth buffer: the floor plane, vertical wall quads for outline and obstacle
edges, and one rectangle per candidate sign. Anything farther than the view
distance is background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import CameraConfig
from .environment import Environment, candidate_signs

_WALL_TOP = 1.0e6  # walls act as full-height occluders, matching 2D line of sight


@dataclass(frozen=True)
class CameraPose:
    floor: str
    position: tuple[float, float]
    eye_height: float
    heading: tuple[float, float]  # unit direction of movement


@dataclass
class ViewRaster:
    pixels: np.ndarray  # (H, W, 3) float in [0, 1]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class SignMask:
    ids: np.ndarray  # (H, W) int32, 0 = background
    depth: np.ndarray  # (H, W) meters, +inf where nothing was hit


@lru_cache(maxsize=8)
def _ray_grid(width: int, height: int, horizontal_fov: float):
    """Per-pixel ray directions in camera space: (forward, right, up) coefficients."""
    half_w = math.tan(math.radians(horizontal_fov) / 2.0)
    half_h = half_w * height / width
    xs = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    ys = 1.0 - (np.arange(height) + 0.5) / height * 2.0
    right = np.broadcast_to(xs[None, :] * half_w, (height, width))
    up = np.broadcast_to(ys[:, None] * half_h, (height, width))
    norm = np.sqrt(1.0 + right**2 + up**2)
    return right.copy(), up.copy(), norm


@lru_cache(maxsize=8)
def _noise_pattern(width: int, height: int, seed: int):
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-1.0, 1.0, size=(height, width, 3))


def _camera_rays(pose: CameraPose, cam: CameraConfig):
    """World-space ray directions (H, W, 3) and their Euclidean norms."""
    right_c, up_c, norm = _ray_grid(cam.raster_width, cam.raster_height, cam.horizontal_fov)
    hx, hy = pose.heading
    # Right-handed, z up: facing +x puts "right" along -y.
    fwd = np.array([hx, hy, 0.0])
    right = np.array([hy, -hx, 0.0])
    up = np.array([0.0, 0.0, 1.0])
    d = (fwd[None, None, :]
         + right_c[:, :, None] * right[None, None, :]
         + up_c[:, :, None] * up[None, None, :])
    return d, norm


def _rasterize_plane(origin, d, norms, point, normal, limit):
    """Ray parameter of the hit with an infinite plane; +inf where missed or too far."""
    denom = d @ normal
    offset = float((point - origin) @ normal)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = offset / denom
    dist = s * norms
    hit = (denom != 0.0) & (s > 1e-9) & (dist <= limit)
    return s, np.where(hit, dist, np.inf)


def render_view(env: Environment, pose: CameraPose, cam: CameraConfig) -> tuple[ViewRaster, SignMask]:
    """Render the agent's view and the aligned sign-ID/depth mask."""
    h, w = cam.raster_height, cam.raster_width
    d, norms = _camera_rays(pose, cam)
    origin = np.array([pose.position[0], pose.position[1], cam.eye_height])

    color = np.empty((h, w, 3))
    color[:] = np.asarray(cam.wall_color)
    ids = np.zeros((h, w), dtype=np.int32)
    depth = np.full((h, w), np.inf)
    limit = cam.max_view_distance

    # Floor plane z = 0.
    s, dist = _rasterize_plane(origin, d, norms, np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]), limit)
    closer = dist < depth
    depth[closer] = dist[closer]
    color[closer] = np.asarray(cam.floor_color)

    # Vertical wall quads for outline and obstacle edges.
    floor = env.floor_by_id(pose.floor)
    for a, b in floor.wall_segments():
        ex, ey = b[0] - a[0], b[1] - a[1]
        length = math.hypot(ex, ey)
        if length <= 0.0:
            continue
        ex, ey = ex / length, ey / length
        normal = np.array([ey, -ex, 0.0])
        s, dist = _rasterize_plane(origin, d, norms, np.array([a[0], a[1], 0.0]), normal, limit)
        closer = dist < depth
        if not closer.any():
            continue
        p = origin[None, None, :] + s[:, :, None] * d
        u = (p[:, :, 0] - a[0]) * ex + (p[:, :, 1] - a[1]) * ey
        inside = closer & (u >= 0.0) & (u <= length) & (p[:, :, 2] >= 0.0) & (p[:, :, 2] <= _WALL_TOP)
        depth[inside] = dist[inside]
        color[inside] = np.asarray(cam.wall_color)

    # Candidate signs, nearest depth wins.
    for sign_id in candidate_signs(env, pose, limit):
        sign = env.sign_by_id(sign_id)
        nx, ny = sign.normal
        normal = np.array([nx, ny, 0.0])
        c = np.array([sign.center[0], sign.center[1], sign.center[2]])
        s, dist = _rasterize_plane(origin, d, norms, c, normal, limit)
        closer = dist < depth
        if not closer.any():
            continue
        p = origin[None, None, :] + s[:, :, None] * d
        # In-plane axes: horizontal tangent and world up.
        u = (p[:, :, 0] - c[0]) * (-ny) + (p[:, :, 1] - c[1]) * nx
        v = p[:, :, 2] - c[2]
        inside = closer & (np.abs(u) <= sign.width / 2.0) & (np.abs(v) <= sign.height / 2.0)
        depth[inside] = dist[inside]
        color[inside] = np.asarray(sign.face_color)
        ids[inside] = sign.id

    if cam.background_noise > 0.0:
        background = ids == 0
        noise = _noise_pattern(w, h, cam.noise_seed)
        color[background] = np.clip(color[background] + cam.background_noise * noise[background], 0.0, 1.0)

    return ViewRaster(pixels=color), SignMask(ids=ids, depth=depth)


def projected_pixel_count(env: Environment, pose: CameraPose, cam: CameraConfig, sign_id: int) -> int:
    """Number of mask pixels covered by the given sign; 0 if not visible."""
    env.sign_by_id(sign_id)  # raises KeyError for unknown ids
    _, mask = render_view(env, pose, cam)
    return int(np.count_nonzero(mask.ids == sign_id))
