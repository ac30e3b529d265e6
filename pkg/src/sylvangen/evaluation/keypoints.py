"""Pixel-error statistics for matched keypoint predictions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataset import CocoDocument, DetectionResult
from ..forest import KEYPOINT_NAMES
from .coco import greedy_match, kernel_matrix

HIST_RANGE = 50
HIST_BIN = 1.0
KP_MATCH_IOU = 0.5
_DIAMETER = (1, 2)


@dataclass
class KeypointStats:
    n_instances: int
    per_keypoint: dict[str, dict[str, float | int | None]]
    density: np.ndarray  # (5, n_bins, n_bins) counts; axis 1 = dy bin, axis 2 = dx bin
    diameter_error_mean: float | None
    diameter_errors: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @property
    def empty(self) -> bool:
        return self.n_instances == 0

    @property
    def bin_edges(self) -> np.ndarray:
        return np.arange(-HIST_RANGE, HIST_RANGE + HIST_BIN, HIST_BIN)

    def to_dict(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "empty": self.empty,
            "per_keypoint": self.per_keypoint,
            "diameter_error_mean": self.diameter_error_mean,
            "histogram": {"range": [-HIST_RANGE, HIST_RANGE], "bin_width": HIST_BIN},
        }


def _histogram(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    n_bins = int(round(2 * HIST_RANGE / HIST_BIN))
    # out-of-range errors land in the edge bins so every keypoint is counted
    jx = np.clip(np.floor((dx + HIST_RANGE) / HIST_BIN).astype(np.int64), 0, n_bins - 1)
    jy = np.clip(np.floor((dy + HIST_RANGE) / HIST_BIN).astype(np.int64), 0, n_bins - 1)
    hist = np.zeros((n_bins, n_bins), dtype=np.int64)
    np.add.at(hist, (jy, jx), 1)
    return hist


def keypoint_error_stats(pairs) -> KeypointStats:
    """Errors ``pred - gt`` per keypoint over matched ``(pred, gt)`` keypoint arrays.

    Only gt keypoints with ``v > 0`` contribute. Sigmas are population
    standard deviations. The diameter error is the absolute difference of the
    left-right pixel distances, over pairs whose gt labels both diameter points.
    """
    pairs = [(np.asarray(p, dtype=np.float64).reshape(-1, 3), np.asarray(g, dtype=np.float64).reshape(-1, 3))
             for p, g in pairs]
    n_kp = len(KEYPOINT_NAMES)
    n_bins = int(round(2 * HIST_RANGE / HIST_BIN))
    density = np.zeros((n_kp, n_bins, n_bins), dtype=np.int64)
    per: dict[str, dict] = {}
    for k, name in enumerate(KEYPOINT_NAMES):
        rows = [(p[k, 0] - g[k, 0], p[k, 1] - g[k, 1]) for p, g in pairs if g[k, 2] > 0]
        if not rows:
            per[name] = {"count": 0, "mean_dx": None, "mean_dy": None, "sigma_x": None, "sigma_y": None,
                         "mean_euclidean": None}
            continue
        d = np.array(rows)
        dx, dy = d[:, 0], d[:, 1]
        per[name] = {
            "count": int(len(d)),
            "mean_dx": float(dx.mean()),
            "mean_dy": float(dy.mean()),
            "sigma_x": float(dx.std()),
            "sigma_y": float(dy.std()),
            "mean_euclidean": float(np.hypot(dx, dy).mean()),
        }
        density[k] = _histogram(dx, dy)
    diam = []
    for p, g in pairs:
        if g[_DIAMETER[0], 2] > 0 and g[_DIAMETER[1], 2] > 0:
            wp = np.hypot(*(p[_DIAMETER[1], :2] - p[_DIAMETER[0], :2]))
            wg = np.hypot(*(g[_DIAMETER[1], :2] - g[_DIAMETER[0], :2]))
            diam.append(abs(wp - wg))
    diam_arr = np.array(diam)
    return KeypointStats(
        n_instances=len(pairs),
        per_keypoint=per,
        density=density,
        diameter_error_mean=float(diam_arr.mean()) if len(diam_arr) else None,
        diameter_errors=diam_arr,
    )


def box_matched_pairs(gt: CocoDocument, preds: list[DetectionResult], iou: float = KP_MATCH_IOU):
    """``(pred_keypoints, gt_keypoints)`` pairs from greedy box matching at ``iou``.

    Predictions need both a box and keypoints; others are ignored here.
    """
    by_image: dict[int, list[DetectionResult]] = {}
    for p in preds:
        if p.bbox is not None and p.keypoints is not None:
            by_image.setdefault(p.image_id, []).append(p)
    gts_by_image: dict[int, list] = {}
    for g in gt.annotations:
        gts_by_image.setdefault(g.image_id, []).append(g)
    pairs = []
    for image_id in sorted(by_image):
        ps = sorted(by_image[image_id], key=lambda p: -p.score)
        gs = gts_by_image.get(image_id, [])
        if not gs:
            continue
        matched = greedy_match(kernel_matrix(ps, gs, "bbox"), iou)
        for i, j in enumerate(matched):
            if j >= 0:
                pairs.append((ps[i].keypoints, gs[j].keypoints))
    return pairs


def density_to_csv_rows(stats: KeypointStats):
    """Long-format rows ``(keypoint, dx_lo, dy_lo, count)`` for non-empty bins."""
    edges = stats.bin_edges
    for k, name in enumerate(KEYPOINT_NAMES):
        iy, ix = np.nonzero(stats.density[k])
        for a, b in zip(iy.tolist(), ix.tolist()):
            yield name, float(edges[b]), float(edges[a]), int(stats.density[k, a, b])
