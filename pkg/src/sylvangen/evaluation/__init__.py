from .coco import (
    IOU_THRESHOLDS,
    RECALL_POINTS,
    MatchResult,
    TaskResult,
    average_precision,
    evaluate_task,
    greedy_match,
    match_and_score,
)
from .keypoints import KeypointStats, box_matched_pairs, keypoint_error_stats
from .report import EvalReport, evaluate, format_report
from .similarity import OKS_K, iou_bbox, iou_mask, oks

__all__ = [
    "EvalReport",
    "IOU_THRESHOLDS",
    "KeypointStats",
    "MatchResult",
    "OKS_K",
    "RECALL_POINTS",
    "TaskResult",
    "average_precision",
    "box_matched_pairs",
    "evaluate",
    "evaluate_task",
    "format_report",
    "greedy_match",
    "iou_bbox",
    "iou_mask",
    "keypoint_error_stats",
    "match_and_score",
    "oks",
]
