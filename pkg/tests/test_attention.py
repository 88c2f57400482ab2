import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signsim import attention
from signsim.attention import (
    beta_factor, column_eccentricity_deg, frustum_map, fuse_attention, gaussian_factor,
    rarity_map, saliency_map, score_signs, semantic_map,
)
from signsim.config import CameraConfig, FrustumParams, FusionWeights
from signsim.perception import CameraPose, SignMask, render_view

from conftest import make_env, make_sign


def test_gaussian_factor_closed_forms():
    params = FrustumParams()
    assert gaussian_factor(0.0, params) == 1.0
    assert gaussian_factor(7.0, params) == pytest.approx(math.exp(-0.5), abs=1e-9)
    assert gaussian_factor(-7.0, params) == pytest.approx(math.exp(-0.5), abs=1e-9)


def test_center_column_factor_is_one_for_odd_width():
    cam = CameraConfig(raster_width=161, raster_height=121)
    theta = column_eccentricity_deg(cam)
    assert theta[80] == pytest.approx(0.0, abs=1e-12)
    assert gaussian_factor(theta, FrustumParams())[80] == pytest.approx(1.0, abs=1e-12)


def test_beta_mode_location_on_480_rows():
    params = FrustumParams()
    cam = CameraConfig(raster_width=160, raster_height=480)
    fru = frustum_map(cam, params)
    row = int(np.argmax(fru[:, 80]))
    mode = 2.0 / 13.0  # (alpha-1)/(alpha+beta-2)
    assert abs((row + 0.5) / 480.0 - mode) <= 1.0 / 480.0


def test_beta_factor_vertical_origin_flip():
    params_top = FrustumParams(vertical_origin="top")
    params_bottom = FrustumParams(vertical_origin="bottom")
    cam = CameraConfig(raster_width=32, raster_height=64)
    top = frustum_map(cam, params_top)
    bottom = frustum_map(cam, params_bottom)
    assert np.allclose(top, bottom[::-1, :])


def test_beta_factor_peak_is_one():
    params = FrustumParams()
    mode = (params.beta_alpha - 1.0) / (params.beta_alpha + params.beta_beta - 2.0)
    assert beta_factor(mode, params) == pytest.approx(1.0, abs=1e-12)
    ys = np.linspace(0.0, 1.0, 10001)
    values = beta_factor(ys, params)
    assert values.max() <= 1.0


def oracle_rarity(values, bins=32):
    """Brute-force histogram self-information, loops and dicts only."""
    flat = [float(v) for row in values for v in row]
    lo, hi = min(flat), max(flat)
    if hi <= lo:
        return np.full(values.shape, 1.0 / bins)
    hist = {}
    idx = {}
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            k = min(int((values[i, j] - lo) / (hi - lo) * bins), bins - 1)
            idx[(i, j)] = k
            hist[k] = hist.get(k, 0) + 1
    n = len(flat)
    out = np.zeros(values.shape)
    for (i, j), k in idx.items():
        out[i, j] = -np.log(hist[k] / n)
    peak = out.max()
    if peak <= 0:
        return np.full(values.shape, 1.0 / bins)
    return out / peak


def test_rarity_matches_hand_oracle_exactly():
    raster = np.full((16, 16, 3), 0.5)
    raster[6:10, 6:10, 0] = 1.0
    raster[6:10, 6:10, 1] = 0.0
    raster[6:10, 6:10, 2] = 0.0
    rg = raster[:, :, 0] - raster[:, :, 1]
    assert np.array_equal(rarity_map(rg), oracle_rarity(rg))
    lum = raster.mean(axis=2)
    assert np.array_equal(rarity_map(lum), oracle_rarity(lum))


def test_saliency_uniform_raster_is_constant():
    raster = np.full((32, 32, 3), 0.42)
    sal = saliency_map(raster)
    assert np.ptp(sal) == 0.0


def test_saliency_red_block_argmax_inside_block():
    raster = np.full((16, 16, 3), 0.5)
    raster[6:10, 6:10] = (1.0, 0.0, 0.0)
    sal = saliency_map(raster)
    iy, ix = np.unravel_index(np.argmax(sal), sal.shape)
    assert 6 <= iy < 10 and 6 <= ix < 10
    assert sal.max() == 1.0
    assert sal.min() >= 0.0


def test_rarity_is_permutation_invariant_as_multiset():
    rng = np.random.Generator(np.random.PCG64(5))
    values = rng.random((12, 12))
    flat = values.ravel().copy()
    rng.shuffle(flat)
    shuffled = flat.reshape(values.shape)
    assert np.allclose(np.sort(rarity_map(values).ravel()),
                       np.sort(rarity_map(shuffled).ravel()))


def test_semantic_map_lookups(camera):
    signs = (
        make_sign(1, 25.0, 20.0, 180.0, object_class="signage"),
        make_sign(2, 25.0, 23.0, 180.0, object_class="infrastructure"),
    )
    env = make_env(signs=signs)
    pose = CameraPose(floor="hall", position=(20.0, 20.0), eye_height=1.6, heading=(1.0, 0.0))
    _, mask = render_view(env, pose, camera)
    sem = semantic_map(mask, env)
    assert np.all(sem[mask.ids == 1] == 1.0)
    assert np.all(sem[mask.ids == 2] == 0.6)
    assert np.all(sem[mask.ids == 0] == 0.05)


def test_fusion_closed_forms():
    w = FusionWeights()
    one = np.ones((4, 4))
    zero = np.zeros((4, 4))
    assert np.allclose(fuse_attention(one, one, one, w), 1.0)
    assert np.allclose(fuse_attention(zero, one, one, w), 0.0)
    quarter = np.full((4, 4), 0.25)
    fused = fuse_attention(quarter, one, one, w, normalize=False)
    assert fused[0, 0] == pytest.approx(0.25 ** (1.0 / 3.0), abs=1e-12)


def test_fusion_dimension_mismatch():
    with pytest.raises(ValueError):
        fuse_attention(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)), FusionWeights())


unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
weight = st.floats(min_value=0.1, max_value=5.0, allow_nan=False)


@settings(max_examples=200)
@given(a=unit, b=unit, c=unit, w1=weight, w2=weight, w3=weight)
def test_fused_between_min_and_max(a, b, c, w1, w2, w3):
    w = FusionWeights(w_sal=w1, w_sem=w2, w_fru=w3)
    sal, sem, fru = (np.full((1, 1), v) for v in (a, b, c))
    fused = fuse_attention(sal, sem, fru, w, normalize=False)[0, 0]
    assert min(a, b, c) - 1e-12 <= fused <= max(a, b, c) + 1e-12


@settings(max_examples=100)
@given(a=unit, b=unit, c=unit, w1=weight, w2=weight, w3=weight,
       scale=st.floats(min_value=0.25, max_value=8.0))
def test_weight_scaling_invariance(a, b, c, w1, w2, w3, scale):
    sal, sem, fru = (np.full((2, 2), v) for v in (a, b, c))
    f1 = fuse_attention(sal, sem, fru, FusionWeights(w1, w2, w3), normalize=False)
    f2 = fuse_attention(sal, sem, fru, FusionWeights(w1 * scale, w2 * scale, w3 * scale),
                        normalize=False)
    assert np.allclose(f1, f2, atol=1e-12)


def make_mask(ids):
    ids = np.asarray(ids, dtype=np.int32)
    return SignMask(ids=ids, depth=np.where(ids > 0, 5.0, np.inf))


def test_score_signs_saturation_value():
    kappa = 192.0
    ids = np.zeros((10, 10), dtype=np.int32)
    ids[:2, :5] = 3  # 10 pixels
    fused = np.zeros((10, 10))
    fused[:2, :5] = kappa * math.log(20.0) / 10.0
    scores = score_signs(fused, make_mask(ids), kappa)
    assert len(scores) == 1
    assert scores[0].sign_id == 3
    assert scores[0].attention == pytest.approx(0.95, abs=1e-12)


def test_score_signs_omits_invisible_and_sorts():
    ids = np.zeros((8, 8), dtype=np.int32)
    ids[0, 0] = 1
    ids[1, 0:3] = 2
    fused = np.ones((8, 8))
    scores = score_signs(fused, make_mask(ids), kappa=4.0)
    assert [s.sign_id for s in scores] == [2, 1]
    assert all(s.sign_id != 7 for s in scores)
    assert all(0.0 <= s.attention < 1.0 for s in scores)


def test_score_signs_attention_monotone_in_raw_sum():
    ids = np.zeros((4, 4), dtype=np.int32)
    ids[0, :2] = 1
    low = np.zeros((4, 4))
    low[0, :2] = 0.3
    high = low.copy()
    high[0, 0] = 0.9
    s_low = score_signs(low, make_mask(ids), kappa=2.0)[0]
    s_high = score_signs(high, make_mask(ids), kappa=2.0)[0]
    assert s_high.attention > s_low.attention


def test_centered_sign_outranks_edge_sign(camera):
    # Two identical signs equidistant ahead: one centered, one near the FOV edge.
    centered = make_sign(1, 30.0, 20.0, 180.0, width=1.5, height=0.8)
    edge = make_sign(2, 30.0, 28.5, 180.0, width=1.5, height=0.8)
    env = make_env(signs=(centered, edge))
    pose = CameraPose(floor="hall", position=(20.0, 20.0), eye_height=1.6, heading=(1.0, 0.0))
    raster, mask = render_view(env, pose, camera)
    fru = frustum_map(camera, FrustumParams())
    sal = saliency_map(raster.pixels)
    sem = semantic_map(mask, env)
    fused = fuse_attention(sal, sem, fru, FusionWeights())
    scores = score_signs(fused, mask, kappa=192.0)
    assert [s.sign_id for s in scores][0] == 1

    # Brute-force pixel-sum oracle agrees with the reported raw sums.
    for score in scores:
        oracle_sum = 0.0
        for iy in range(mask.ids.shape[0]):
            for ix in range(mask.ids.shape[1]):
                if mask.ids[iy, ix] == score.sign_id:
                    oracle_sum += fused[iy, ix]
        assert oracle_sum == pytest.approx(score.raw_sum, rel=1e-9)


def test_frustum_map_values_in_unit_interval(camera):
    fru = frustum_map(camera, FrustumParams())
    assert fru.shape == (camera.raster_height, camera.raster_width)
    assert fru.min() >= 0.0 and fru.max() <= 1.0
