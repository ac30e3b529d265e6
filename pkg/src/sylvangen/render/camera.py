"""Pinhole camera pose and placement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..seeding import rng_from
from ..terrain import TerrainGrid, sample_height


@dataclass(frozen=True)
class CameraPose:
    """Camera at ``position`` looking along (yaw, pitch); z is up.

    Image coordinates are continuous with pixel ``(i, j)`` covering
    ``[j, j+1) x [i, i+1)``; the principal point is the image centre.
    """

    position: tuple[float, float, float]
    yaw: float
    pitch: float
    vertical_fov: float = math.radians(70.0)
    width: int = 800
    height: int = 800

    def __post_init__(self) -> None:
        if not (0.0 < self.vertical_fov < math.pi):
            raise ParameterError("vertical_fov must lie in (0, pi)")
        if self.width <= 0 or self.height <= 0:
            raise ParameterError("image size must be positive")

    @property
    def focal(self) -> float:
        return self.height / (2.0 * math.tan(self.vertical_fov / 2.0))

    @property
    def principal_point(self) -> tuple[float, float]:
        return self.width / 2.0, self.height / 2.0

    @property
    def forward(self) -> np.ndarray:
        cp = math.cos(self.pitch)
        return np.array([cp * math.cos(self.yaw), cp * math.sin(self.yaw), math.sin(self.pitch)])

    @property
    def right(self) -> np.ndarray:
        return np.array([math.sin(self.yaw), -math.cos(self.yaw), 0.0])

    @property
    def up(self) -> np.ndarray:
        return np.cross(self.right, self.forward)

    @property
    def world_to_camera(self) -> np.ndarray:
        """Rows are the camera right, up and forward axes."""
        return np.stack([self.right, self.up, self.forward])

    def to_camera(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=np.float64)) - np.asarray(self.position)
        return p @ self.world_to_camera.T

    def project(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Project world points to pixel coordinates; returns ``(uv, view_z)``."""
        pc = self.to_camera(points)
        cx, cy = self.principal_point
        f = self.focal
        z = pc[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = cx + f * pc[:, 0] / z
            v = cy - f * pc[:, 1] / z
        return np.stack([u, v], axis=1), z

    def pixel_rays(self) -> np.ndarray:
        """Unnormalised world-space ray directions through pixel centres, shape (H, W, 3).

        Each ray has unit component along ``forward``.
        """
        cx, cy = self.principal_point
        f = self.focal
        xs = (np.arange(self.width) + 0.5 - cx) / f
        ys = (cy - (np.arange(self.height) + 0.5)) / f
        gx, gy = np.meshgrid(xs, ys)
        return gx[..., None] * self.right + gy[..., None] * self.up + self.forward


@dataclass(frozen=True)
class CameraConfig:
    height_range: tuple[float, float] = (1.6, 2.6)
    pitch_range: tuple[float, float] = (-0.20, 0.05)
    vertical_fov: float = math.radians(70.0)
    width: int = 800
    height: int = 800
    # keep the eye this far from any trunk base
    tree_clearance: float = 1.0


def place_camera(grid: TerrainGrid, rng_seed: int, config: CameraConfig | None = None, trees=()) -> CameraPose:
    """Random pose over the central half of the terrain.

    Eye height is terrain plus ``uniform(height_range)``; yaw is uniform in
    [0, 2*pi) and pitch uniform in ``pitch_range``. Positions closer than
    ``tree_clearance`` to a trunk are redrawn (bounded retries).
    """
    config = config or CameraConfig()
    rng = rng_from(rng_seed, "camera")
    qx, qy = grid.extent_x / 4.0, grid.extent_y / 4.0
    bases = np.array([t.base_position[:2] for t in trees], dtype=np.float64).reshape(-1, 2)
    for _ in range(64):
        x = float(rng.uniform(qx, 3.0 * qx))
        y = float(rng.uniform(qy, 3.0 * qy))
        if len(bases) == 0:
            break
        d = np.hypot(bases[:, 0] - x, bases[:, 1] - y)
        if d.min() >= config.tree_clearance:
            break
    eye = sample_height(grid, x, y) + float(rng.uniform(*config.height_range))
    yaw = float(rng.uniform(0.0, 2.0 * math.pi))
    pitch = float(rng.uniform(*config.pitch_range))
    return CameraPose((x, y, eye), yaw, pitch, config.vertical_fov, config.width, config.height)
