"""Task-based visual attention: frustum, saliency, and semantic channels fused
by a weighted geometric mean, then summed per sign into a sorted score list.

The frustum channel is a peak-normalized Gaussian over horizontal eccentricity
(degrees) multiplied by a peak-normalized Beta density over the normalized
vertical coordinate. Saliency is histogram rarity (self-information) of
luminance and color-opponent channels over a three-level dyadic pyramid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import CameraConfig, FrustumParams, FusionWeights
from .environment import Environment
from .perception import SignMask

SALIENCY_BINS = 32
SALIENCY_LEVELS = 3
_UNIFORM_FLOOR = 1.0 / SALIENCY_BINS


@dataclass(frozen=True)
class SignScore:
    sign_id: int
    raw_sum: float
    attention: float  # 1 - exp(-raw_sum / kappa), in [0, 1)


def gaussian_factor(theta_deg, params: FrustumParams):
    """Horizontal frustum factor, peak-normalized to 1 at the mean."""
    theta = np.asarray(theta_deg, dtype=float)
    z = (theta - params.gaussian_mu) / params.gaussian_sigma
    return np.exp(-0.5 * z * z)


def beta_factor(yhat, params: FrustumParams):
    """Vertical frustum factor: Beta(alpha, beta) density, peak-normalized to 1."""
    a, b = params.beta_alpha, params.beta_beta
    y = np.clip(np.asarray(yhat, dtype=float), 0.0, 1.0)
    mode = (a - 1.0) / (a + b - 2.0) if a + b != 2.0 else 0.5
    peak = mode ** (a - 1.0) * (1.0 - mode) ** (b - 1.0)
    if peak <= 0.0:
        return np.ones_like(y)
    return y ** (a - 1.0) * (1.0 - y) ** (b - 1.0) / peak


def column_eccentricity_deg(cam: CameraConfig) -> np.ndarray:
    """Horizontal eccentricity in degrees of each raster column's center."""
    half_w = math.tan(math.radians(cam.horizontal_fov) / 2.0)
    xs = (np.arange(cam.raster_width) + 0.5) / cam.raster_width * 2.0 - 1.0
    return np.degrees(np.arctan(xs * half_w))


def frustum_map(cam: CameraConfig, params: FrustumParams) -> np.ndarray:
    horizontal = gaussian_factor(column_eccentricity_deg(cam), params)
    yhat = (np.arange(cam.raster_height) + 0.5) / cam.raster_height
    if params.vertical_origin == "bottom":
        yhat = 1.0 - yhat
    vertical = beta_factor(yhat, params)
    return vertical[:, None] * horizontal[None, :]


def _downsample2(channel: np.ndarray) -> np.ndarray:
    """One dyadic pyramid step: binomial [1,4,6,4,1]/16 blur, then decimate by 2."""
    kernel = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    padded = np.pad(channel, ((2, 2), (0, 0)), mode="reflect")
    rows = sum(kernel[k] * padded[k:k + channel.shape[0], :] for k in range(5))
    padded = np.pad(rows, ((0, 0), (2, 2)), mode="reflect")
    blurred = sum(kernel[k] * padded[:, k:k + channel.shape[1]] for k in range(5))
    return blurred[::2, ::2]


def _upsample_bilinear(m: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = m.shape
    out_h, out_w = shape
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = m[y0][:, x0] * (1.0 - wx) + m[y0][:, x1] * wx
    bottom = m[y1][:, x0] * (1.0 - wx) + m[y1][:, x1] * wx
    return top * (1.0 - wy) + bottom * wy


def rarity_map(values: np.ndarray, bins: int = SALIENCY_BINS) -> np.ndarray:
    """Histogram self-information per pixel, normalized so the maximum is 1.

    An all-equal input has zero rarity everywhere and maps to the uniform
    floor 1/bins instead.
    """
    lo = float(values.min())
    hi = float(values.max())
    if hi <= lo:
        return np.full(values.shape, _UNIFORM_FLOOR)
    idx = np.minimum(((values - lo) / (hi - lo) * bins).astype(int), bins - 1)
    hist = np.bincount(idx.ravel(), minlength=bins)
    rarity = -np.log(hist[idx] / values.size)
    peak = rarity.max()
    if peak <= 0.0:
        return np.full(values.shape, _UNIFORM_FLOOR)
    return rarity / peak


def saliency_map(pixels: np.ndarray, levels: int = SALIENCY_LEVELS, bins: int = SALIENCY_BINS) -> np.ndarray:
    """Bottom-up rarity saliency over a dyadic pyramid of opponent channels."""
    pixels = np.asarray(pixels, dtype=float)
    r, g, b = pixels[:, :, 0], pixels[:, :, 1], pixels[:, :, 2]
    channels = [
        (r + g + b) / 3.0,  # luminance
        r - g,              # red-green opponent
        b - (r + g) / 2.0,  # blue-yellow opponent
    ]
    shape = pixels.shape[:2]
    maps = []
    for channel in channels:
        level = channel
        for _ in range(levels):
            maps.append(_upsample_bilinear(rarity_map(level, bins), shape))
            level = _downsample2(level)
    out = np.mean(maps, axis=0)
    peak = out.max()
    if peak > 0.0:
        out = out / peak
    return out


def semantic_map(mask: SignMask, env: Environment) -> np.ndarray:
    """Per-pixel task relevance looked up from the sign's object class."""
    model = env.semantic_model
    out = np.full(mask.ids.shape, model.background_relevance)
    for sign_id in np.unique(mask.ids):
        if sign_id == 0:
            continue
        sign = env.sign_by_id(int(sign_id))
        out[mask.ids == sign_id] = model.relevance[sign.object_class]
    return out


def fuse_attention(sal: np.ndarray, sem: np.ndarray, fru: np.ndarray,
                   weights: FusionWeights, normalize: bool = True) -> np.ndarray:
    """Weighted geometric mean of the three channels.

    With normalize=True the frame is rescaled so its maximum is 1 (all-zero
    frames stay all-zero); normalize=False returns the raw mean.
    """
    if not sal.shape == sem.shape == fru.shape:
        raise ValueError(f"channel shapes differ: {sal.shape}, {sem.shape}, {fru.shape}")
    total = weights.w_sal + weights.w_sem + weights.w_fru
    fused = (np.power(sal, weights.w_sal / total)
             * np.power(sem, weights.w_sem / total)
             * np.power(fru, weights.w_fru / total))
    if normalize:
        peak = fused.max()
        if peak > 0.0:
            fused = fused / peak
    return fused


def score_signs(fused: np.ndarray, mask: SignMask, kappa: float) -> list[SignScore]:
    """Sum fused attention per sign, saturate to [0, 1), sort best-first."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    ids = mask.ids.ravel()
    counts = np.bincount(ids)
    sums = np.bincount(ids, weights=fused.ravel())
    scores = [
        SignScore(sign_id=int(sid), raw_sum=float(sums[sid]),
                  attention=float(-math.expm1(-sums[sid] / kappa)))
        for sid in np.nonzero(counts > 0)[0]
        if sid != 0
    ]
    scores.sort(key=lambda s: (-s.attention, s.sign_id))
    return scores
