"""Image-space weather post-pass: wet darkening, snow cover, fog, precipitation."""

from __future__ import annotations

import numpy as np

from ..seeding import rng_from
from .conditions import Conditions, Weather

WET_ALBEDO_SCALE = 0.7
RAIN_COLOR = np.array([0.80, 0.82, 0.86])
SNOW_COLOR = np.array([1.0, 1.0, 1.0])
# streak/flake counts for an 800x800 frame at full intensity
RAIN_STREAKS = 2500
SNOW_FLAKES = 3000


def fog_factor(fog_density: float, depth_m: np.ndarray) -> np.ndarray:
    """Blend weight towards the fog colour, ``1 - exp(-density * depth)``."""
    d = np.asarray(depth_m, dtype=np.float64)
    with np.errstate(invalid="ignore", over="ignore"):
        prod = fog_density * d
    prod = np.where(d > 0, prod, 0.0)
    return 1.0 - np.exp(-prod)


def _precipitation_alpha(shape, conditions: Conditions, frame_seed: int) -> tuple[np.ndarray, np.ndarray]:
    H, W = shape
    alpha = np.zeros((H, W), dtype=np.float64)
    scale = H * W / 640_000.0
    rng = rng_from(frame_seed, "precipitation")
    if conditions.weather is Weather.RAIN:
        n = int(round(conditions.precipitation_intensity * RAIN_STREAKS * scale))
        x0 = rng.uniform(0, W, n)
        y0 = rng.uniform(-20, H, n)
        length = rng.uniform(8.0, 22.0, n)
        slant = rng.uniform(0.15, 0.30)
        steps = np.arange(22, dtype=np.float64)
        t = steps[None, :]
        keep = t < length[:, None]
        xs = np.floor(x0[:, None] + slant * t).astype(np.int64)
        ys = np.floor(y0[:, None] + t).astype(np.int64)
        ok = keep & (xs >= 0) & (xs < W) & (ys >= 0) & (ys < H)
        np.maximum.at(alpha, (ys[ok], xs[ok]), 0.35)
        return alpha, RAIN_COLOR
    if conditions.weather is Weather.SNOW:
        n = int(round(conditions.precipitation_intensity * SNOW_FLAKES * scale))
        xs = rng.integers(0, W, n)
        ys = rng.integers(0, H, n)
        big = rng.uniform(size=n) < 0.3
        np.maximum.at(alpha, (ys, xs), 0.85)
        for dy, dx in ((0, 1), (1, 0), (1, 1)):
            yy, xx = ys[big] + dy, xs[big] + dx
            ok = (yy < H) & (xx < W)
            np.maximum.at(alpha, (yy[ok], xx[ok]), 0.85)
        return alpha, SNOW_COLOR
    return alpha, SNOW_COLOR


def apply_weather(
    rgb: np.ndarray,
    depth_m: np.ndarray,
    conditions: Conditions,
    frame_seed: int = 0,
    up_facing: np.ndarray | None = None,
) -> np.ndarray:
    """Return a weathered copy of an 8-bit RGB frame.

    ``up_facing`` holds, per pixel, the upward normal component of terrain
    and crown surfaces (0 elsewhere); snow cover is blended onto it. Sky
    pixels (infinite depth) are left out of the wet and fog passes.
    """
    rgb = np.asarray(rgb)
    depth_m = np.asarray(depth_m)
    if rgb.shape[:2] != depth_m.shape:
        raise ValueError("rgb and depth buffers must share dimensions")
    precip = conditions.weather in (Weather.RAIN, Weather.SNOW) and conditions.precipitation_intensity > 0
    if conditions.fog_density == 0 and not conditions.wet and conditions.snow_cover == 0 and not precip:
        return rgb.copy()

    out = rgb.astype(np.float64) / 255.0
    finite = np.isfinite(depth_m)
    if conditions.wet:
        out[finite] *= WET_ALBEDO_SCALE
    if conditions.snow_cover > 0 and up_facing is not None:
        w = conditions.snow_cover * np.clip((np.asarray(up_facing) - 0.45) / 0.35, 0.0, 1.0)
        out += (0.92 - out) * w[..., None]
    if conditions.fog_density > 0:
        k = fog_factor(conditions.fog_density, depth_m)
        k = np.where(finite, k, 0.0)
        fog = np.asarray(conditions.lighting.fog_color)
        out += (fog - out) * k[..., None]
    if precip:
        alpha, color = _precipitation_alpha(depth_m.shape, conditions, frame_seed)
        out += (color - out) * alpha[..., None]
    return np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)
