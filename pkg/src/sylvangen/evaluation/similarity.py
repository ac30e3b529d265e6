"""Matching kernels: box IoU, run-length mask IoU and keypoint similarity (OKS)."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..rle import rle_area, rle_intervals

# per-keypoint falloff constant shared by all five tree keypoints
OKS_K = 0.05


def iou_bbox(a, b) -> float:
    ax, ay, aw, ah = (float(v) for v in a)
    bx, by, bw, bh = (float(v) for v in b)
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    inter = max(0.0, iw) * max(0.0, ih)
    union = aw * ah + bw * bh - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def _intersection_length(ia: list, ib: list) -> int:
    """Total overlap of two sorted, disjoint half-open interval lists."""
    total = 0
    i = j = 0
    na, nb = len(ia), len(ib)
    while i < na and j < nb:
        sa, ea = ia[i]
        sb, eb = ib[j]
        lo = sa if sa > sb else sb
        hi = ea if ea < eb else eb
        if hi > lo:
            total += hi - lo
        if ea < eb:
            i += 1
        else:
            j += 1
    return total


def mask_overlap(a: dict, b: dict) -> tuple[int, int]:
    """``(intersection, union)`` pixel counts of two RLE masks, without decoding."""
    if list(a["size"]) != list(b["size"]):
        raise DomainError(f"mask canvases differ: {a['size']} vs {b['size']}")
    inter = _intersection_length(rle_intervals(a).tolist(), rle_intervals(b).tolist())
    union = rle_area(a) + rle_area(b) - inter
    return inter, union


def iou_mask(a: dict, b: dict) -> float:
    inter, union = mask_overlap(a, b)
    if union == 0:
        return 0.0
    return inter / union


def oks(pred, gt, gt_area: float, k: float | np.ndarray = OKS_K) -> float:
    """Mean of ``exp(-d^2 / (2 s^2 k^2))`` over labelled gt keypoints, ``s^2 = gt_area``."""
    p = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    g = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    vis = g[:, 2] > 0
    if not vis.any():
        raise DomainError("OKS is undefined when no ground-truth keypoint is labelled")
    kk = np.broadcast_to(np.asarray(k, dtype=np.float64), (len(g),))
    d2 = (p[:, 0] - g[:, 0]) ** 2 + (p[:, 1] - g[:, 1]) ** 2
    s2 = max(float(gt_area), np.finfo(float).tiny)
    e = d2 / (2.0 * s2 * kk**2)
    return float(np.mean(np.exp(-e[vis])))
