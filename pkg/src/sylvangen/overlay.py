"""Annotation overlays for visual inspection."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .dataset import CocoDocument
from .forest import KEYPOINT_SKELETON
from .rle import rle_decode

KEYPOINT_COLOR = (255, 0, 255)


def annotation_color(index: int) -> tuple[int, int, int]:
    """Distinct, saturated colour per annotation index (never the keypoint colour)."""
    hue = (index * 0.618033988749895) % 1.0
    r, g, b = _hsv(hue, 0.9, 1.0)
    col = (int(r * 255), int(g * 255), int(b * 255))
    return (col[0], min(col[1], 254), col[2]) if col == KEYPOINT_COLOR else col


def _hsv(h: float, s: float, v: float):
    i = int(h * 6.0) % 6
    f = h * 6.0 - int(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    return [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]


def _contour(mask: np.ndarray) -> np.ndarray:
    m = mask.astype(bool)
    inner = m.copy()
    inner[1:, :] &= m[:-1, :]
    inner[:-1, :] &= m[1:, :]
    inner[:, 1:] &= m[:, :-1]
    inner[:, :-1] &= m[:, 1:]
    return m & ~inner


def draw_overlay(rgb: np.ndarray, annotations) -> np.ndarray:
    """Draw mask contours, boxes, skeleton edges and keypoints.

    Box outlines use :func:`annotation_color` of the annotation's position in
    ``annotations``; keypoints with ``v > 0`` are drawn as single pixels in
    ``KEYPOINT_COLOR`` at the floored coordinates. No annotations returns an
    unmodified copy.
    """
    out = np.array(rgb, dtype=np.uint8, copy=True)
    if not annotations:
        return out
    for n, ann in enumerate(annotations):
        col = np.array(annotation_color(n), dtype=np.float64)
        c = _contour(rle_decode(ann.rle))
        out[c] = (0.5 * out[c] + 0.5 * col).astype(np.uint8)
    img = Image.fromarray(out)
    draw = ImageDraw.Draw(img)
    for n, ann in enumerate(annotations):
        x, y, w, h = ann.bbox
        draw.rectangle([x, y, x + w - 1, y + h - 1], outline=annotation_color(n))
    for n, ann in enumerate(annotations):
        kps = np.asarray(ann.keypoints, dtype=np.float64).reshape(-1, 3)
        for a, b in KEYPOINT_SKELETON:
            pa, pb = kps[a - 1], kps[b - 1]
            if pa[2] > 0 and pb[2] > 0:
                draw.line([(pa[0], pa[1]), (pb[0], pb[1])], fill=annotation_color(n), width=1)
    out = np.asarray(img).copy()
    H, W = out.shape[:2]
    for ann in annotations:
        kps = np.asarray(ann.keypoints, dtype=np.float64).reshape(-1, 3)
        for x, y, v in kps:
            if v > 0:
                j, i = int(np.floor(x)), int(np.floor(y))
                if 0 <= i < H and 0 <= j < W:
                    out[i, j] = KEYPOINT_COLOR
    return out


def inspect_image(doc: CocoDocument, image_id: int, root: str | Path, out_path: str | Path) -> int:
    """Write an overlay PNG for ``image_id``; returns the number of annotations drawn."""
    try:
        image = doc.image(image_id)
    except KeyError:
        raise KeyError(f"unknown image id {image_id}") from None
    rgb = np.asarray(Image.open(Path(root) / image["file_name"]).convert("RGB"))
    anns = doc.annotations_for(image_id)
    Image.fromarray(draw_overlay(rgb, anns)).save(out_path)
    return len(anns)
