"""COCO-style greedy matching and 101-point interpolated average precision."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..annotate import Annotation
from ..dataset import CocoDocument, DetectionResult
from ..errors import FormatError
from .similarity import OKS_K, iou_bbox, iou_mask, oks

# k/100 gives the correctly rounded decimals; linspace drifts by an ulp at
# some points (0.3 becomes 0.30000000000000004) and drops exact recalls.
IOU_THRESHOLDS = np.arange(50, 100, 5) / 100.0
RECALL_POINTS = np.arange(101) / 100.0
MAX_DETS = 100

TASKS = ("bbox", "segm", "keypoints")
_KERNEL_ALIASES = {"bbox": "bbox", "mask": "segm", "segm": "segm", "oks": "keypoints", "keypoints": "keypoints"}


def canonical_task(name: str) -> str:
    try:
        return _KERNEL_ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown task/kernel {name!r}; use one of bbox, segm/mask, keypoints/oks") from None


def has_payload(pred: DetectionResult, task: str) -> bool:
    task = canonical_task(task)
    if task == "bbox":
        return pred.bbox is not None
    if task == "segm":
        return pred.rle is not None
    return pred.keypoints is not None


def gt_eligible(gt: Annotation, task: str) -> bool:
    """Keypoint evaluation skips instances without any labelled keypoint."""
    if canonical_task(task) == "keypoints":
        return any(v > 0 for v in gt.keypoints[2::3])
    return True


def pred_eligible(pred: DetectionResult, task: str) -> bool:
    """Mirror of :func:`gt_eligible`: a prediction with no ``v > 0`` keypoint declares none."""
    if canonical_task(task) == "keypoints":
        return any(v > 0 for v in pred.keypoints[2::3])
    return True


def kernel_value(pred: DetectionResult, gt: Annotation, task: str, oks_k=OKS_K) -> float:
    task = canonical_task(task)
    if task == "bbox":
        return iou_bbox(pred.bbox, gt.bbox)
    if task == "segm":
        return iou_mask(pred.rle, gt.rle)
    return oks(pred.keypoints, gt.keypoints, gt.area, oks_k)


def kernel_matrix(preds: list[DetectionResult], gts: list[Annotation], task: str, oks_k=OKS_K) -> np.ndarray:
    sim = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            sim[i, j] = kernel_value(p, g, task, oks_k)
    return sim


def greedy_match(sim: np.ndarray, threshold: float) -> np.ndarray:
    """Match score-sorted predictions (rows) to gts (columns).

    Each prediction takes the still-unmatched gt with the highest kernel
    value, provided it is ``>= threshold``; the first such gt wins ties.
    Returns the matched gt column per row, ``-1`` for false positives.
    """
    n_pred, n_gt = sim.shape
    taken = np.zeros(n_gt, dtype=bool)
    matched = np.full(n_pred, -1, dtype=np.int64)
    for i in range(n_pred):
        best = -1
        best_val = threshold
        for j in range(n_gt):
            if taken[j]:
                continue
            v = sim[i, j]
            if v >= best_val and (best < 0 or v > sim[i, best]):
                best = j
                best_val = v
        if best >= 0:
            taken[best] = True
            matched[i] = best
    return matched


def _score_order(preds: list[DetectionResult]) -> list[int]:
    # stable: equal scores keep insertion order
    return sorted(range(len(preds)), key=lambda i: -preds[i].score)


@dataclass
class ImageMatches:
    image_id: int
    pred_index: np.ndarray  # global indices of kept predictions, score-sorted
    scores: np.ndarray
    sim: np.ndarray  # kept predictions x eligible gts
    gt_index: list[int]  # positions of eligible gts in the input list


@dataclass
class MatchResult:
    """Per-prediction outcome at one threshold, in global score order."""

    pred_index: np.ndarray
    image_ids: np.ndarray
    scores: np.ndarray
    matched_gt: np.ndarray  # index into the gt list, -1 = false positive
    n_gt: int

    @property
    def tp(self) -> np.ndarray:
        return self.matched_gt >= 0

    @property
    def n_tp(self) -> int:
        return int(self.tp.sum())

    @property
    def n_fp(self) -> int:
        return int((~self.tp).sum())

    @property
    def n_fn(self) -> int:
        return self.n_gt - self.n_tp


def prepare_matches(preds: list[DetectionResult], gts: list[Annotation], task: str,
                    max_dets: int = MAX_DETS, oks_k=OKS_K) -> list[ImageMatches]:
    """Group by image, sort by score, cap at ``max_dets`` and compute kernel matrices."""
    task = canonical_task(task)
    pred_by_image: dict[int, list[int]] = defaultdict(list)
    for i, p in enumerate(preds):
        if not has_payload(p, task):
            raise FormatError(f"prediction {i} (image {p.image_id}) has no payload for task {task!r}")
        if not pred_eligible(p, task):
            continue
        pred_by_image[p.image_id].append(i)
    gt_by_image: dict[int, list[int]] = defaultdict(list)
    for j, g in enumerate(gts):
        if gt_eligible(g, task):
            gt_by_image[g.image_id].append(j)
    out = []
    for image_id in sorted(set(pred_by_image) | set(gt_by_image)):
        idx = pred_by_image.get(image_id, [])
        local = [preds[i] for i in idx]
        order = _score_order(local)[:max_dets]
        kept = [idx[o] for o in order]
        gidx = gt_by_image.get(image_id, [])
        sim = kernel_matrix([preds[i] for i in kept], [gts[j] for j in gidx], task, oks_k)
        out.append(ImageMatches(image_id, np.array(kept, dtype=np.int64),
                                np.array([preds[i].score for i in kept]), sim, gidx))
    return out


def _collect(images: list[ImageMatches], threshold: float) -> MatchResult:
    pred_index, image_ids, scores, matched = [], [], [], []
    n_gt = 0
    for im in images:
        m = greedy_match(im.sim, threshold)
        gmap = np.asarray(im.gt_index + [-1], dtype=np.int64)
        pred_index.append(im.pred_index)
        image_ids.append(np.full(len(im.pred_index), im.image_id, dtype=np.int64))
        scores.append(im.scores)
        matched.append(gmap[m] if len(m) else np.zeros(0, dtype=np.int64))
        n_gt += len(im.gt_index)
    if pred_index:
        pi, ii, sc, mg = (np.concatenate(a) for a in (pred_index, image_ids, scores, matched))
    else:
        pi = ii = mg = np.zeros(0, dtype=np.int64)
        sc = np.zeros(0)
    # deterministic global order: score desc, then image id, then prediction index
    order = np.lexsort((pi, ii, -sc))
    return MatchResult(pi[order], ii[order], sc[order], mg[order], n_gt)


def match_and_score(preds: list[DetectionResult], gts: list[Annotation], kernel: str, threshold: float,
                    max_dets: int = MAX_DETS) -> MatchResult:
    return _collect(prepare_matches(preds, gts, kernel, max_dets), threshold)


def average_precision(tp: np.ndarray, n_gt: int) -> float | None:
    """101-point interpolated AP (percent) of score-ordered TP flags; ``None`` when there is no gt."""
    if n_gt <= 0:
        return None
    tp = np.asarray(tp, dtype=bool)
    if tp.size == 0:
        return 0.0
    tps = np.cumsum(tp)
    fps = np.cumsum(~tp)
    recall = tps / n_gt
    precision = tps / (tps + fps)
    # precision envelope: non-increasing from the right
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(idx < len(precision), precision[np.minimum(idx, len(precision) - 1)], 0.0)
    return float(np.mean(sampled) * 100.0)


@dataclass
class TaskResult:
    task: str
    ap: float | None
    ap50: float | None
    per_threshold: list[float | None] = field(default_factory=list)
    n_gt: int = 0
    n_pred: int = 0


def evaluate_task(gt: CocoDocument, preds: list[DetectionResult], task: str,
                  max_dets: int = MAX_DETS, oks_k=OKS_K) -> TaskResult:
    """AP averaged over thresholds 0.50:0.05:0.95 and AP at 0.50."""
    task = canonical_task(task)
    images = prepare_matches(preds, gt.annotations, task, max_dets, oks_k)
    per = []
    n_gt = 0
    for t in IOU_THRESHOLDS:
        res = _collect(images, float(t))
        n_gt = res.n_gt
        per.append(average_precision(res.tp, res.n_gt))
    if n_gt == 0:
        return TaskResult(task, None, None, per, 0, len(preds))
    return TaskResult(task, float(np.mean(per)), per[0], per, n_gt, len(preds))
