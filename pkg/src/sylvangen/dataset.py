"""COCO-format dataset export, scene-atomic splitting and prediction loading.

JSON is written by a small fixed-order serializer: keys keep insertion
order and floats use 17 significant digits, so repeated exports of the same
data are byte-identical and every float survives a round trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotate import Annotation
from .errors import ConfigurationError, ConsistencyError, FormatError
from .forest import KEYPOINT_NAMES, KEYPOINT_SKELETON

SPLITS = ("train", "val", "test")
SPLIT_RATIOS = (40, 1, 2)
DEFAULT_FRAME_RANGE = (200, 1000)
GENERATOR_VERSION = "sylvangen-0.1.0"

TREE_CATEGORY = {
    "id": 1,
    "name": "tree",
    "supercategory": "tree",
    "keypoints": list(KEYPOINT_NAMES),
    "skeleton": [list(e) for e in KEYPOINT_SKELETON],
}


# -- serialization -----------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite float {x!r} cannot be serialized")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_stable(doc: dict) -> str:
    """Serialize a top-level dict, one list element per line for diffability."""
    lines = ["{"]
    items = list(doc.items())
    for n, (key, value) in enumerate(items):
        tail = "," if n < len(items) - 1 else ""
        if isinstance(value, list) and value:
            lines.append(f"{json.dumps(key)}:[")
            lines.extend(_encode(v) + ("," if i < len(value) - 1 else "") for i, v in enumerate(value))
            lines.append("]" + tail)
        else:
            lines.append(f"{json.dumps(key)}:{_encode(value)}{tail}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_stable_json(doc: dict, path: str | Path) -> None:
    Path(path).write_text(dumps_stable(doc), encoding="utf-8")


# -- COCO documents ----------------------------------------------------------

def annotation_to_dict(ann: Annotation) -> dict:
    return {
        "id": ann.annotation_id,
        "image_id": ann.image_id,
        "category_id": ann.category_id,
        "iscrowd": ann.iscrowd,
        "bbox": list(ann.bbox),
        "area": ann.area,
        "segmentation": {"size": list(ann.rle["size"]), "counts": list(ann.rle["counts"])},
        "keypoints": list(ann.keypoints),
        "num_keypoints": ann.num_keypoints,
        "instance_id": ann.instance_id,
        "distance_m": ann.distance_m,
        **ann.extra,
    }


_ANN_KEYS = {"id", "image_id", "category_id", "iscrowd", "bbox", "area", "segmentation", "keypoints",
             "num_keypoints", "instance_id", "distance_m"}


def annotation_from_dict(raw: dict) -> Annotation:
    try:
        seg = raw["segmentation"]
        return Annotation(
            annotation_id=int(raw["id"]),
            image_id=int(raw["image_id"]),
            category_id=int(raw.get("category_id", 1)),
            iscrowd=int(raw.get("iscrowd", 0)),
            instance_id=int(raw.get("instance_id", 0)),
            bbox=tuple(raw["bbox"]),
            area=raw["area"],
            rle={"size": list(seg["size"]), "counts": list(seg["counts"])},
            keypoints=list(raw.get("keypoints", [0.0] * 15)),
            num_keypoints=int(raw.get("num_keypoints", 0)),
            distance_m=raw.get("distance_m", 0.0),
            extra={k: v for k, v in raw.items() if k not in _ANN_KEYS},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed annotation {raw.get('id', '?') if isinstance(raw, dict) else raw!r}: {exc}") from exc


@dataclass
class CocoDocument:
    images: list[dict] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)
    categories: list[dict] = field(default_factory=lambda: [dict(TREE_CATEGORY)])
    info: dict = field(default_factory=lambda: {"description": "sylvangen synthetic forest", "version": GENERATOR_VERSION})

    def validate(self) -> None:
        image_ids = [img["id"] for img in self.images]
        if len(set(image_ids)) != len(image_ids):
            raise ConsistencyError("duplicate image ids")
        ann_ids = [a.annotation_id for a in self.annotations]
        if len(set(ann_ids)) != len(ann_ids):
            raise ConsistencyError("duplicate annotation ids")
        known = set(image_ids)
        for a in self.annotations:
            if a.image_id not in known:
                raise ConsistencyError(f"annotation {a.annotation_id} references unknown image {a.image_id}")
            if a.category_id != 1:
                raise ConsistencyError(f"annotation {a.annotation_id} has category {a.category_id}, expected 1")

    def to_dict(self) -> dict:
        return {
            "info": self.info,
            "categories": self.categories,
            "images": self.images,
            "annotations": [annotation_to_dict(a) for a in self.annotations],
        }

    def image(self, image_id: int) -> dict:
        for img in self.images:
            if img["id"] == image_id:
                return img
        raise KeyError(image_id)

    def annotations_for(self, image_id: int) -> list[Annotation]:
        return [a for a in self.annotations if a.image_id == image_id]


def write_coco(doc: CocoDocument, path: str | Path) -> Path:
    doc.validate()
    path = Path(path)
    write_stable_json(doc.to_dict(), path)
    return path


def load_coco(path: str | Path) -> CocoDocument:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict) or "images" not in raw or "annotations" not in raw:
        raise FormatError(f"{path}: not a COCO document (needs 'images' and 'annotations')")
    doc = CocoDocument(
        images=list(raw["images"]),
        annotations=[annotation_from_dict(a) for a in raw["annotations"]],
        categories=list(raw.get("categories", [dict(TREE_CATEGORY)])),
        info=dict(raw.get("info", {})),
    )
    try:
        doc.validate()
    except ConsistencyError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return doc


# -- frame images --------------------------------------------------------------

def frame_file_names(split: str, frame_id: int) -> tuple[str, str]:
    return f"{split}/{frame_id:06d}_rgb.png", f"{split}/{frame_id:06d}_depth.png"


def write_frame_images(frame, out_dir: str | Path, split: str, frame_id: int, d_max: float = 30.0,
                       debug_ids: bool = False) -> tuple[str, str]:
    """Write RGB (8-bit, 3 channels) and depth (8-bit, 1 channel) PNGs for one frame."""
    from PIL import Image

    from .render.depth import encode_depth

    out_dir = Path(out_dir)
    rgb_name, depth_name = frame_file_names(split, frame_id)
    (out_dir / split).mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame.rgb).save(out_dir / rgb_name, compress_level=1)
    Image.fromarray(encode_depth(frame.depth_m, d_max)).save(out_dir / depth_name, compress_level=1)
    if debug_ids:
        ids = np.minimum(frame.instance_id, 65535).astype(np.uint16)
        Image.fromarray(ids).save(out_dir / split / f"{frame_id:06d}_ids.png")
    return rgb_name, depth_name


def image_record(frame, frame_id: int, split: str, **meta) -> dict:
    rgb_name, depth_name = frame_file_names(split, frame_id)
    cam = frame.camera
    return {
        "id": frame_id,
        "file_name": rgb_name,
        "depth_file_name": depth_name,
        "width": cam.width,
        "height": cam.height,
        "camera": {
            "position": list(cam.position),
            "yaw": cam.yaw,
            "pitch": cam.pitch,
            "vertical_fov": cam.vertical_fov,
            "focal_px": cam.focal,
        },
        "conditions": frame.conditions.to_dict(),
        **meta,
    }


@dataclass
class ExportFrame:
    frame_id: int
    annotations: list[Annotation]
    frame: object = None  # FrameBundle; images are only written when present
    image: dict | None = None


def export_coco(frames: list[ExportFrame], out_dir: str | Path, split_name: str, d_max: float = 30.0) -> Path:
    """Write ``annotations_{split}.json`` plus the frames' RGB/depth PNGs.

    Annotation ids are assigned 1.. in frame order unless already set.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = CocoDocument()
    next_id = 1
    for rec in frames:
        if rec.frame is not None:
            write_frame_images(rec.frame, out_dir, split_name, rec.frame_id, d_max)
            image = rec.image or image_record(rec.frame, rec.frame_id, split_name)
        elif rec.image is not None:
            image = rec.image
        else:
            raise ConsistencyError(f"frame {rec.frame_id} has neither a rendered frame nor an image record")
        doc.images.append(image)
        for ann in rec.annotations:
            if ann.image_id != rec.frame_id:
                raise ConsistencyError(f"annotation for image {ann.image_id} attached to frame {rec.frame_id}")
            if ann.annotation_id == 0:
                ann.annotation_id = next_id
            next_id = max(next_id, ann.annotation_id) + 1
            doc.annotations.append(ann)
    return write_coco(doc, out_dir / f"annotations_{split_name}.json")


# -- manifest and splits -------------------------------------------------------

@dataclass
class SceneEntry:
    scene_seed: int
    frame_count: int
    split: str | None = None


@dataclass
class DatasetManifest:
    master_seed: int
    scenes: list[SceneEntry]
    resolution: tuple[int, int] = (800, 800)
    split_counts: dict[str, int] = field(default_factory=dict)
    generator_version: str = GENERATOR_VERSION
    config: dict = field(default_factory=dict)

    @property
    def total_frames(self) -> int:
        return sum(s.frame_count for s in self.scenes)

    def validate(self, frame_range: tuple[int, int] = DEFAULT_FRAME_RANGE) -> None:
        lo, hi = frame_range
        for k, s in enumerate(self.scenes):
            if not (lo <= s.frame_count <= hi):
                raise ConfigurationError(f"scene {k} has {s.frame_count} frames, outside [{lo}, {hi}]")

    def to_dict(self) -> dict:
        return {
            "generator_version": self.generator_version,
            "master_seed": self.master_seed,
            "resolution": list(self.resolution),
            "split_counts": dict(self.split_counts),
            "scenes": [{"scene_seed": s.scene_seed, "frame_count": s.frame_count, "split": s.split} for s in self.scenes],
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetManifest":
        return cls(
            master_seed=int(raw["master_seed"]),
            scenes=[SceneEntry(int(s["scene_seed"]), int(s["frame_count"]), s.get("split")) for s in raw["scenes"]],
            resolution=tuple(raw.get("resolution", (800, 800))),
            split_counts=dict(raw.get("split_counts", {})),
            generator_version=raw.get("generator_version", GENERATOR_VERSION),
            config=dict(raw.get("config", {})),
        )


def split_dataset(manifest: DatasetManifest, total_frames: int | None = None) -> list[str]:
    """Assign whole scenes to train/val/test, approximating 40:1:2 by frame count.

    Scenes are taken in manifest order and each goes to the split with the
    largest remaining deficit (ties: train, val, test), except that once the
    remaining scenes are only just enough to give every still-empty split
    one scene, they go to the empty splits.
    """
    total = manifest.total_frames if total_frames is None else total_frames
    n = len(manifest.scenes)
    if n < len(SPLITS):
        raise ConfigurationError(f"{n} scene(s) cannot fill {len(SPLITS)} scene-atomic splits")
    if total < sum(SPLIT_RATIOS):
        raise ConfigurationError(f"{total} frames are too few for a {':'.join(map(str, SPLIT_RATIOS))} split")
    ratio_sum = sum(SPLIT_RATIOS)
    targets = [total * r / ratio_sum for r in SPLIT_RATIOS]
    assigned = [0, 0, 0]
    used = [0, 0, 0]
    labels: list[str] = []
    for idx, scene in enumerate(manifest.scenes):
        remaining = n - idx
        empty = [k for k in range(3) if used[k] == 0]
        candidates = empty if remaining <= len(empty) else [0, 1, 2]
        best = max(candidates, key=lambda k: (targets[k] - assigned[k], -k))
        assigned[best] += scene.frame_count
        used[best] += 1
        labels.append(SPLITS[best])
    return labels


# -- predictions ---------------------------------------------------------------

@dataclass
class DetectionResult:
    image_id: int
    score: float
    bbox: tuple | None = None
    rle: dict | None = None
    keypoints: list[float] | None = None
    category_id: int = 1

    def __post_init__(self) -> None:
        if self.bbox is None and self.rle is None and self.keypoints is None:
            raise FormatError("detection carries no bbox, segmentation or keypoints")
        if not math.isfinite(self.score):
            raise FormatError("detection score must be finite")


def _iter_array_elements(text: str):
    """Yield ``(element, line_number)`` for each element of a top-level JSON array."""
    dec = json.JSONDecoder()
    pos = 0
    n = len(text)

    def skip(p):
        while p < n and text[p] in " \t\r\n":
            p += 1
        return p

    pos = skip(pos)
    if pos >= n or text[pos] != "[":
        raise FormatError("line 1: predictions file must hold a JSON array")
    pos = skip(pos + 1)
    if pos < n and text[pos] == "]":
        return
    while True:
        line = text.count("\n", 0, pos) + 1
        try:
            obj, pos = dec.raw_decode(text, pos)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {exc.lineno}: {exc.msg}") from exc
        yield obj, line
        pos = skip(pos)
        if pos < n and text[pos] == ",":
            pos = skip(pos + 1)
            continue
        if pos < n and text[pos] == "]":
            if skip(pos + 1) != n:
                raise FormatError(f"line {text.count(chr(10), 0, pos) + 1}: trailing data after array")
            return
        raise FormatError(f"line {text.count(chr(10), 0, pos) + 1}: expected ',' or ']'")


def _parse_detection(raw, line: int, known_images: set | None) -> DetectionResult:
    def fail(msg: str):
        raise FormatError(f"line {line}: {msg}")

    if not isinstance(raw, dict):
        fail("prediction must be an object")
    if "image_id" not in raw or "score" not in raw:
        fail("prediction needs 'image_id' and 'score'")
    image_id = raw["image_id"]
    if not isinstance(image_id, int) or isinstance(image_id, bool):
        fail(f"image_id must be an integer, got {image_id!r}")
    if known_images is not None and image_id not in known_images:
        fail(f"unknown image_id {image_id}")
    score = raw["score"]
    if not isinstance(score, (int, float)) or isinstance(score, bool) or not math.isfinite(score):
        fail(f"score must be a finite number, got {score!r}")
    if not 0.0 <= score <= 1.0:
        fail(f"score {score} outside [0, 1]")
    category = raw.get("category_id", 1)
    if category != 1:
        fail(f"category_id {category!r} is not the tree category (1)")
    bbox = raw.get("bbox")
    if bbox is not None:
        if not (isinstance(bbox, list) and len(bbox) == 4 and all(isinstance(v, (int, float)) for v in bbox)):
            fail("bbox must be [x, y, w, h]")
        if bbox[2] < 0 or bbox[3] < 0:
            fail("bbox width/height must be non-negative")
        bbox = tuple(bbox)
    rle = raw.get("segmentation")
    if rle is not None:
        if not (isinstance(rle, dict) and isinstance(rle.get("counts"), list) and isinstance(rle.get("size"), list)):
            fail("segmentation must be an uncompressed RLE {size, counts}")
        h, w = rle["size"]
        if sum(rle["counts"]) != h * w:
            fail("segmentation counts do not sum to height * width")
        rle = {"size": list(rle["size"]), "counts": list(rle["counts"])}
    kps = raw.get("keypoints")
    if kps is not None:
        if not (isinstance(kps, list) and len(kps) == 3 * len(KEYPOINT_NAMES)):
            fail(f"keypoints must hold {3 * len(KEYPOINT_NAMES)} numbers")
        kps = list(kps)
    if bbox is None and rle is None and kps is None:
        fail("prediction carries no bbox, segmentation or keypoints")
    return DetectionResult(image_id, float(score), bbox, rle, kps, 1)


def load_predictions(path: str | Path, ground_truth: CocoDocument | None = None) -> list[DetectionResult]:
    """Parse a COCO results file, reporting problems with their line number."""
    text = Path(path).read_text(encoding="utf-8")
    known = {img["id"] for img in ground_truth.images} if ground_truth is not None else None
    return [_parse_detection(raw, line, known) for raw, line in _iter_array_elements(text)]


def annotations_to_results(doc: CocoDocument, score: float = 1.0) -> list[dict]:
    """Turn ground truth into a results list (useful for self-evaluation)."""
    return [
        {
            "image_id": a.image_id,
            "category_id": 1,
            "score": score,
            "bbox": list(a.bbox),
            "segmentation": {"size": list(a.rle["size"]), "counts": list(a.rle["counts"])},
            "keypoints": list(a.keypoints),
        }
        for a in doc.annotations
    ]


def write_results(results: list[dict], path: str | Path) -> None:
    text = "[\n" + ",\n".join(_encode(r) for r in results) + ("\n" if results else "") + "]\n"
    Path(path).write_text(text, encoding="utf-8")
