"""Summary statistics of a COCO ground-truth document."""

from __future__ import annotations

import math

import numpy as np

from .dataset import CocoDocument
from .forest import KEYPOINT_NAMES


def dataset_stats(doc: CocoDocument, distance_bin: float = 1.0) -> dict:
    n_ann = len(doc.annotations)
    visible = {name: 0 for name in KEYPOINT_NAMES}
    labelled = {name: 0 for name in KEYPOINT_NAMES}
    for a in doc.annotations:
        for k, name in enumerate(KEYPOINT_NAMES):
            v = a.keypoints[3 * k + 2]
            visible[name] += v == 2
            labelled[name] += v > 0
    rates = {
        name: {
            "visible": visible[name] / n_ann if n_ann else 0.0,
            "labelled": labelled[name] / n_ann if n_ann else 0.0,
        }
        for name in KEYPOINT_NAMES
    }
    dists = np.array([a.distance_m for a in doc.annotations], dtype=np.float64)
    top = max(1.0, math.ceil(dists.max() / distance_bin) * distance_bin) if n_ann else distance_bin
    edges = np.arange(0.0, top + distance_bin / 2, distance_bin)
    counts, _ = np.histogram(dists, bins=edges)
    return {
        "images": len(doc.images),
        "annotations": n_ann,
        "annotations_per_image": n_ann / len(doc.images) if doc.images else 0.0,
        "keypoint_rates": rates,
        "distance_histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
    }


def format_stats(s: dict) -> str:
    lines = [
        f"images:       {s['images']}",
        f"annotations:  {s['annotations']}",
        f"per image:    {s['annotations_per_image']:.3f}",
        "",
        f"{'keypoint':<16}{'visible':>9}{'labelled':>10}",
    ]
    for name, r in s["keypoint_rates"].items():
        lines.append(f"{name:<16}{r['visible']:>9.3f}{r['labelled']:>10.3f}")
    lines.append("")
    lines.append("distance to tree base (m)")
    edges = s["distance_histogram"]["edges"]
    for lo, hi, c in zip(edges[:-1], edges[1:], s["distance_histogram"]["counts"]):
        lines.append(f"  [{lo:5.1f}, {hi:5.1f})  {c}")
    return "\n".join(lines) + "\n"
