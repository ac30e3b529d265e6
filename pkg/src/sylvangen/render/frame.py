"""Frame rendering: z-buffer, sun shading with a shadow map, weather."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Scene
from . import kernels
from .camera import CameraPose
from .conditions import Conditions, Lighting
from .weather import apply_weather

SHADOW_MAP_SIZE = 1024
SHADOW_BIAS = 0.06
NEAR_PLANE = 0.05


@dataclass(eq=False)
class FrameBundle:
    rgb: np.ndarray  # (H, W, 3) uint8
    depth_m: np.ndarray  # (H, W) float32, metres along the view ray, +inf for sky
    instance_id: np.ndarray  # (H, W) uint32, 0 = no tree
    camera: CameraPose
    conditions: Conditions
    surface: np.ndarray  # (H, W) uint8 geometry.Part of the visible surface
    triangle_index: np.ndarray  # (H, W) int32, -1 for sky
    frame_seed: int = 0


@dataclass(frozen=True)
class ShadowMap:
    light_rot: np.ndarray
    origin_u: float
    origin_v: float
    texel: float
    depth: np.ndarray

    @classmethod
    def empty(cls) -> "ShadowMap":
        return cls(np.eye(3), 0.0, 0.0, 1.0, np.full((1, 1), np.inf))


def _light_basis(sun_dir: np.ndarray) -> np.ndarray:
    d = -np.asarray(sun_dir, dtype=np.float64)
    d /= np.linalg.norm(d)
    u = np.cross(d, [0.0, 0.0, 1.0])
    if np.linalg.norm(u) < 1e-9:
        u = np.array([1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    v = np.cross(d, u)
    return np.stack([u, v, d])


def build_shadow_map(scene: Scene, lighting: Lighting, size: int = SHADOW_MAP_SIZE) -> ShadowMap:
    tris = scene.triangles
    if len(tris) == 0:
        return ShadowMap.empty()
    rot = _light_basis(lighting.sun_direction)
    pts = tris.reshape(-1, 3) @ rot.T
    lo = pts[:, :2].min(axis=0)
    hi = pts[:, :2].max(axis=0)
    texel = float(max(hi - lo) * (1.0 + 1e-6) / size) or 1.0
    smap = np.full((size, size), np.inf)
    kernels.rasterize_shadow(tris, rot, float(lo[0]), float(lo[1]), texel, size, smap)
    return ShadowMap(rot, float(lo[0]), float(lo[1]), texel, smap)


def scene_shadow_map(scene: Scene, conditions: Conditions) -> ShadowMap:
    key = ("shadow", conditions.time_of_day)
    cache = scene._cache
    if key not in cache:
        cache[key] = build_shadow_map(scene, conditions.lighting)
    return cache[key]


def render_frame(
    scene: Scene,
    camera: CameraPose,
    conditions: Conditions | None = None,
    frame_seed: int = 0,
    sun_intensity: float | None = None,
    shadows: bool = True,
) -> FrameBundle:
    """Rasterise ``scene`` from ``camera`` and shade it under ``conditions``.

    ``sun_intensity`` overrides the preset's direct-light strength (0 gives
    the ambient-only image).
    """
    conditions = conditions or Conditions()
    lighting = conditions.lighting
    W, H = camera.width, camera.height
    rot = camera.world_to_camera
    cam_pos = np.asarray(camera.position, dtype=np.float64)
    cx, cy = camera.principal_point
    f = camera.focal

    mesh = scene.mesh
    tris = scene.triangles
    zbuf = np.full((H, W), np.inf)
    tri_buf = np.full((H, W), -1, dtype=np.int32)
    id_buf = np.zeros((H, W), dtype=np.int64)
    kernels.rasterize(tris, mesh.instance_id, rot, cam_pos, f, cx, cy, W, H, NEAR_PLANE, zbuf, tri_buf, id_buf)

    intensity = lighting.sun_intensity if sun_intensity is None else float(sun_intensity)
    use_shadow = shadows and intensity > 0 and len(tris) > 0
    smap = scene_shadow_map(scene, conditions) if use_shadow else ShadowMap.empty()

    rgb_f = np.empty((H, W, 3))
    depth = np.empty((H, W))
    surface = np.empty((H, W), dtype=np.uint8)
    up_facing = np.empty((H, W))
    normals = scene.normals if len(tris) else np.zeros((0, 3))
    kernels.shade(
        zbuf, tri_buf, normals, mesh.colors.astype(np.float64), mesh.part, rot, cam_pos, f, cx, cy,
        lighting.sun_direction, np.array(lighting.sun_color), intensity, np.array(lighting.ambient),
        np.array(lighting.sky_horizon), np.array(lighting.sky_zenith),
        use_shadow, smap.light_rot, smap.origin_u, smap.origin_v, smap.texel, smap.depth, SHADOW_BIAS,
        rgb_f, depth, surface, up_facing,
    )
    rgb = np.clip(np.rint(rgb_f * 255.0), 0, 255).astype(np.uint8)
    rgb = apply_weather(rgb, depth, conditions, frame_seed=frame_seed, up_facing=up_facing)
    return FrameBundle(
        rgb=rgb,
        depth_m=depth.astype(np.float32),
        instance_id=id_buf.astype(np.uint32),
        camera=camera,
        conditions=conditions,
        surface=surface,
        triangle_index=tri_buf,
        frame_seed=frame_seed,
    )
