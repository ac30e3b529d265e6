"""Evaluation reports: text tables, JSON and density CSV."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from ..dataset import CocoDocument, DetectionResult
from .coco import TASKS, TaskResult, canonical_task, evaluate_task, has_payload
from .keypoints import KeypointStats, box_matched_pairs, density_to_csv_rows, keypoint_error_stats


@dataclass
class EvalReport:
    ap: dict[str, TaskResult]
    keypoint_stats: KeypointStats | None = None

    def value(self, task: str, key: str = "ap") -> float | None:
        res = self.ap.get(task)
        return None if res is None else getattr(res, key)

    def to_dict(self) -> dict:
        return {
            "ap": {
                t: {"AP": r.ap, "AP50": r.ap50, "per_threshold": r.per_threshold, "n_gt": r.n_gt, "n_pred": r.n_pred}
                for t, r in self.ap.items()
            },
            "keypoint_stats": None if self.keypoint_stats is None else self.keypoint_stats.to_dict(),
        }


def evaluate(gt: CocoDocument, preds: list[DetectionResult], tasks=TASKS) -> EvalReport:
    """Run each task; keypoint error statistics ride along with the keypoint task."""
    tasks = [canonical_task(t) for t in tasks]
    results = {t: evaluate_task(gt, preds, t) for t in tasks}
    stats = None
    if "keypoints" in tasks:
        stats = keypoint_error_stats(box_matched_pairs(gt, preds))
    return EvalReport(results, stats)


def available_tasks(preds: list[DetectionResult]) -> list[str]:
    if not preds:
        return list(TASKS)
    return [t for t in TASKS if all(has_payload(p, t) for p in preds)]


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.2f}"


def format_report(report: EvalReport) -> str:
    """Render the AP table (box/mask columns), the task table and keypoint errors."""
    bb = report.ap.get("bbox")
    mk = report.ap.get("segm")
    kp = report.ap.get("keypoints")
    lines = [
        f"{'AP^bb':>8} {'AP^mask':>8} {'AP50^bb':>8} {'AP50^mask':>10}",
        f"{_fmt(bb and bb.ap):>8} {_fmt(mk and mk.ap):>8} {_fmt(bb and bb.ap50):>8} {_fmt(mk and mk.ap50):>10}",
        "",
        f"{'Tasks':<24}{'AP^bb':>8} {'AP^mask':>8} {'AP^kp':>8}",
    ]
    evaluated = [name for name, r in (("bbox", bb), ("mask", mk), ("keypoint", kp)) if r is not None]
    label = " & ".join(evaluated) if evaluated else "none"
    lines.append(f"{label:<24}{_fmt(bb and bb.ap):>8} {_fmt(mk and mk.ap):>8} {_fmt(kp and kp.ap):>8}")
    if kp is not None:
        lines.append(f"{'':<24}{'AP50^kp':>8} {_fmt(kp.ap50):>8}")
    st = report.keypoint_stats
    if st is not None:
        lines.append("")
        if st.empty:
            lines.append("keypoint errors: no box-matched instances")
        else:
            lines.append(f"keypoint errors over {st.n_instances} box-matched instances (px)")
            lines.append(f"{'keypoint':<16}{'n':>6}{'mean dx':>9}{'mean dy':>9}{'sigma x':>9}{'sigma y':>9}{'mean |d|':>10}")
            for name, s in st.per_keypoint.items():
                lines.append(
                    f"{name:<16}{s['count']:>6}{_fmt(s['mean_dx']):>9}{_fmt(s['mean_dy']):>9}"
                    f"{_fmt(s['sigma_x']):>9}{_fmt(s['sigma_y']):>9}{_fmt(s['mean_euclidean']):>10}"
                )
            lines.append(f"mean diameter error: {_fmt(st.diameter_error_mean)} px")
    return "\n".join(lines) + "\n"


def write_report_json(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_density_csv(stats: KeypointStats, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["keypoint", "dx_lo", "dy_lo", "count"])
        for row in density_to_csv_rows(stats):
            w.writerow(row)
