import math

import numpy as np
import pytest

from signsim.config import CameraConfig
from signsim.perception import CameraPose, SignMask, ViewRaster, projected_pixel_count, render_view

from conftest import make_env, make_sign


def pose_at(x, y, heading=(1.0, 0.0), floor="hall", eye=1.6):
    return CameraPose(floor=floor, position=(x, y), eye_height=eye, heading=heading)


def project_point_pixels(point, pose, cam):
    """Independent pinhole projection of a world point to pixel coordinates."""
    hx, hy = pose.heading
    rel = np.array([point[0] - pose.position[0], point[1] - pose.position[1],
                    point[2] - cam.eye_height])
    fwd = rel @ np.array([hx, hy, 0.0])
    right = rel @ np.array([hy, -hx, 0.0])
    up = rel[2]
    half_w = math.tan(math.radians(cam.horizontal_fov) / 2.0)
    half_h = half_w * cam.raster_height / cam.raster_width
    ndc_x = right / (fwd * half_w)
    ndc_y = up / (fwd * half_h)
    col = (ndc_x + 1.0) / 2.0 * cam.raster_width - 0.5
    row = (1.0 - ndc_y) / 2.0 * cam.raster_height - 0.5
    return col, row


def projected_quad_area(sign, pose, cam):
    """Exact projected area in pixels of the sign rectangle (shoelace oracle)."""
    nx, ny = sign.normal
    tx, ty = -ny, nx
    cx, cy, cz = sign.center
    corners = []
    for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        corner = (cx + su * tx * sign.width / 2.0,
                  cy + su * ty * sign.width / 2.0,
                  cz + sv * sign.height / 2.0)
        corners.append(project_point_pixels(corner, pose, cam))
    area = 0.0
    for i in range(4):
        x0, y0 = corners[i]
        x1, y1 = corners[(i + 1) % 4]
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0


def test_sign_ahead_hits_center_pixel(camera):
    sign = make_sign(7, 25.0, 20.0, 180.0, width=1.0, height=0.5, z=1.6)
    env = make_env(signs=(sign,))
    raster, mask = render_view(env, pose_at(20.0, 20.0), camera)
    h, w = camera.raster_height, camera.raster_width
    assert mask.ids[h // 2, w // 2] == 7
    assert isinstance(raster, ViewRaster) and isinstance(mask, SignMask)
    assert raster.pixels.shape == (h, w, 3)


def test_sign_behind_gives_empty_mask(camera):
    sign = make_sign(7, 15.0, 20.0, 0.0)
    env = make_env(signs=(sign,))
    _, mask = render_view(env, pose_at(20.0, 20.0), camera)
    assert not mask.ids.any()


def test_near_sign_fully_covers_far_sign(camera):
    near = make_sign(1, 24.0, 20.0, 180.0, width=2.0, height=1.0)
    far = make_sign(2, 30.0, 20.0, 180.0, width=1.0, height=0.5)
    env = make_env(signs=(near, far))
    assert projected_pixel_count(env, pose_at(20.0, 20.0), camera, 2) == 0
    assert projected_pixel_count(env, pose_at(20.0, 20.0), camera, 1) > 0


def test_pixel_count_matches_area_oracle_and_inverse_square(camera):
    pose = pose_at(10.0, 20.0)
    counts = {}
    for d in (5.0, 10.0):
        sign = make_sign(3, 10.0 + d, 20.0, 180.0, width=1.0, height=0.5, z=1.6)
        env = make_env(signs=(sign,))
        count = projected_pixel_count(env, pose, camera, 3)
        area = projected_quad_area(sign, pose, camera)
        assert count == pytest.approx(area, rel=0.12)
        counts[d] = count
    assert counts[5.0] / counts[10.0] == pytest.approx(4.0, rel=0.15)


def test_sign_outside_fov_has_zero_pixels(camera):
    sign = make_sign(4, 21.0, 30.0, 270.0)  # 90 deg to the left of the heading
    env = make_env(signs=(sign,))
    assert projected_pixel_count(env, pose_at(20.0, 20.0), camera, 4) == 0


def test_sign_occluded_by_obstacle(camera):
    sign = make_sign(5, 30.0, 20.0, 180.0)
    box = ((24.0, 18.0), (26.0, 18.0), (26.0, 22.0), (24.0, 22.0))
    env = make_env(signs=(sign,), obstacles=(box,))
    assert projected_pixel_count(env, pose_at(20.0, 20.0), camera, 5) == 0


def test_unknown_sign_id_raises(camera):
    env = make_env(signs=(make_sign(1, 25.0, 20.0, 180.0),))
    with pytest.raises(KeyError):
        projected_pixel_count(env, pose_at(20.0, 20.0), camera, 99)


def test_mask_raster_consistency(camera):
    signs = (make_sign(1, 25.0, 20.0, 180.0, color=(0.9, 0.1, 0.1)),
             make_sign(2, 28.0, 22.0, 180.0, color=(0.1, 0.9, 0.2)))
    env = make_env(signs=signs)
    raster, mask = render_view(env, pose_at(20.0, 20.0), camera)
    for sign in signs:
        covered = mask.ids == sign.id
        if covered.any():
            assert np.allclose(raster.pixels[covered], sign.face_color)


def test_degenerate_pose_inside_obstacle(camera):
    box = ((19.0, 19.0), (21.0, 19.0), (21.0, 21.0), (19.0, 21.0))
    sign = make_sign(1, 30.0, 20.0, 180.0)
    env = make_env(signs=(sign,), obstacles=(box,))
    _, mask = render_view(env, pose_at(20.0, 20.0), camera)
    assert not mask.ids.any()


def rotate(point, angle):
    c, s = math.cos(angle), math.sin(angle)
    return (c * point[0] - s * point[1], c * point[1] + s * point[0])


def test_rotational_equivariance(camera):
    angle = math.radians(37.0)
    sign = make_sign(9, 26.0, 21.0, 185.0, width=1.3, height=0.6)
    env = make_env(signs=(sign,), width=80.0, height=80.0)
    pose = pose_at(20.0, 20.0, heading=(1.0, 0.0))

    from signsim.environment import Environment, Floor, NamedPoint

    heading2 = rotate(pose.heading, angle)
    pos2 = rotate(pose.position, angle)
    normal2 = rotate(sign.normal, angle)
    center2 = rotate((sign.center[0], sign.center[1]), angle)
    facing2 = math.degrees(math.atan2(normal2[1], normal2[0]))
    sign2 = make_sign(9, center2[0], center2[1], facing2, width=1.3, height=0.6)
    outline2 = tuple(rotate(p, angle) for p in env.floors[0].outline)
    env2 = Environment(
        floors=(Floor(id="hall", outline=outline2),),
        signs=(sign2,),
        base_points=(NamedPoint(id="bp_0", floor="hall", point=rotate((1.0, 1.0), angle)),),
    )
    pose2 = CameraPose(floor="hall", position=pos2, eye_height=1.6, heading=heading2)

    # Projected corner coordinates agree to 1e-9 between the two frames.
    for su, sv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        tx, ty = -sign.normal[1], sign.normal[0]
        corner = (sign.center[0] + su * tx * 0.65, sign.center[1] + su * ty * 0.65,
                  sign.center[2] + sv * 0.3)
        tx2, ty2 = -sign2.normal[1], sign2.normal[0]
        corner2 = (sign2.center[0] + su * tx2 * 0.65, sign2.center[1] + su * ty2 * 0.65,
                   sign2.center[2] + sv * 0.3)
        c1 = project_point_pixels(corner, pose, camera)
        c2 = project_point_pixels(corner2, pose2, camera)
        assert c1 == pytest.approx(c2, abs=1e-9)

    count1 = projected_pixel_count(env, pose, camera, 9)
    count2 = projected_pixel_count(env2, pose2, camera, 9)
    assert count1 == count2 > 0


def test_monotone_occlusion(camera):
    sign = make_sign(6, 30.0, 20.0, 180.0, width=2.0, height=1.0)
    base = make_env(signs=(sign,))
    pose = pose_at(20.0, 20.0)
    base_count = projected_pixel_count(base, pose, camera, 6)
    assert base_count > 0
    # Obstacle clipping the lower-left of the view toward the sign.
    box = ((24.0, 18.5), (25.0, 18.5), (25.0, 20.0), (24.0, 20.0))
    blocked = make_env(signs=(sign,), obstacles=(box,))
    assert projected_pixel_count(blocked, pose, camera, 6) <= base_count


def test_background_colors(camera):
    env = make_env(width=200.0, height=200.0)
    raster, mask = render_view(env, pose_at(20.0, 20.0), camera)
    assert not mask.ids.any()
    # Bottom rows see the nearby floor plane; the top-left ray points up and
    # left where the nearest wall is beyond the view distance.
    assert np.allclose(raster.pixels[camera.raster_height - 1, 0], camera.floor_color)
    assert np.allclose(raster.pixels[0, 0], camera.wall_color)
    assert np.isinf(mask.depth[0, 0])
