"""Ground-truth extraction from rendered frames."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError
from .forest import FELLING_CUT_HEIGHT, TreeInstance, tree_keypoints_3d
from .geometry import Part, Scene
from .render.camera import CameraPose
from .render.frame import FrameBundle
from .rle import mask_to_rle

ANNOTATION_RADIUS = 10.0
MIN_PIXELS = 50
# slack between a keypoint's depth and the depth buffer before it counts as occluded
OCCLUSION_TOLERANCE = 0.15


@dataclass
class Annotation:
    image_id: int
    instance_id: int
    bbox: tuple[int, int, int, int]
    area: int
    rle: dict
    keypoints: list[float]  # flat x1, y1, v1, ..., x5, y5, v5
    num_keypoints: int
    distance_m: float
    annotation_id: int = 0
    category_id: int = 1
    iscrowd: int = 0
    extra: dict = field(default_factory=dict)

    def keypoint_array(self) -> np.ndarray:
        return np.asarray(self.keypoints, dtype=np.float64).reshape(5, 3)


def _surface_offsets(tree: TreeInstance) -> np.ndarray:
    """Distance from each keypoint to the trunk surface facing the viewer."""
    return np.array([
        tree.radius_at(FELLING_CUT_HEIGHT),
        0.0,
        0.0,
        tree.radius_at(tree.trunk_height / 2.0),
        tree.radius_at(tree.trunk_height),
    ])


def project_keypoints(tree: TreeInstance, camera: CameraPose, depth_m: np.ndarray) -> np.ndarray:
    """Project the five tree keypoints; returns a (5, 3) array of ``(x, y, v)``.

    ``v=2``: inside the image and not hidden by a nearer surface; ``v=1``:
    inside but occluded; ``v=0``: outside the image or behind the camera.
    Axis keypoints (cut, middle, top) are depth-tested at the trunk surface
    in front of them, so a trunk never occludes its own axis.
    """
    cam = np.asarray(camera.position, dtype=np.float64)
    base = np.asarray(tree.base_position, dtype=np.float64)
    view_dir = base - cam
    view_dir[2] = 0.0
    if math.hypot(view_dir[0], view_dir[1]) < 1e-9:
        view_dir = camera.forward.copy()
    pts = tree_keypoints_3d(tree, view_dir)
    uv, z = camera.project(pts)
    dist = np.linalg.norm(pts - cam, axis=1) - _surface_offsets(tree)
    out = np.zeros((5, 3))
    H, W = depth_m.shape
    for k in range(5):
        u, v = uv[k]
        if not (z[k] > 0 and 0.0 <= u < W and 0.0 <= v < H):
            continue
        j, i = int(math.floor(u)), int(math.floor(v))
        visible = dist[k] <= float(depth_m[i, j]) + OCCLUSION_TOLERANCE
        out[k] = (u, v, 2.0 if visible else 1.0)
    return out


def _tight_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return (int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))


def extract_instances(
    frame: FrameBundle,
    scene: Scene,
    radius_m: float = ANNOTATION_RADIUS,
    min_pixels: int = MIN_PIXELS,
    image_id: int = 0,
    trunk_only: bool = False,
) -> list[Annotation]:
    """Annotate every tree within ``radius_m`` of the camera showing at least ``min_pixels`` pixels.

    Annotations come out in ascending instance id order.
    """
    ids = frame.instance_id
    present, counts = np.unique(ids, return_counts=True)
    cam = np.asarray(frame.camera.position, dtype=np.float64)
    H, W = ids.shape
    out: list[Annotation] = []
    for tid, count in zip(present.tolist(), counts.tolist()):
        if tid == 0:
            continue
        if not scene.has_tree(tid):
            raise ConsistencyError(f"instance id {tid} in frame is not a tree of this scene")
        tree = scene.tree(tid)
        dist = float(np.linalg.norm(np.asarray(tree.base_position) - cam))
        if dist > radius_m or count < min_pixels:
            continue
        mask = ids == tid
        if trunk_only:
            mask &= frame.surface == Part.TRUNK
        area = int(mask.sum())
        if area < min_pixels:
            continue
        kps = project_keypoints(tree, frame.camera, frame.depth_m)
        out.append(
            Annotation(
                image_id=image_id,
                instance_id=tid,
                bbox=_tight_bbox(mask),
                area=area,
                rle=mask_to_rle(mask, H, W),
                keypoints=[float(x) for x in kps.ravel()],
                num_keypoints=int((kps[:, 2] > 0).sum()),
                distance_m=dist,
            )
        )
    return out
