import filecmp
import json
import os
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from sylvangen.cli import main
from sylvangen.dataset import CocoDocument, annotations_to_results, load_coco, write_coco, write_results
from sylvangen.overlay import KEYPOINT_COLOR, annotation_color, draw_overlay
from sylvangen.pipeline import GenerateConfig, effective_workers

SMALL = {
    "master_seed": 5,
    "n_scenes": 1,
    "frames_per_scene_range": [3, 3],
    "resolution": [160, 120],
    "terrain": {"size_m": 48.0},
}


def _write_cfg(tmp_path, **over):
    cfg = dict(SMALL, **over)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def _tree_bytes(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    cfg = _write_cfg(root)
    out = root / "out"
    res = CliRunner().invoke(main, ["generate", "--config", str(cfg), "--out", str(out)])
    assert res.exit_code == 0, res.output
    return out, res.output


def test_generate_outputs(small_dataset):
    out, text = small_dataset
    assert "throughput" in text and "frames/min" in text
    files = _tree_bytes(out)
    assert "manifest.json" in files and "annotations_train.json" in files
    rgb = Image.open(out / "train" / "000001_rgb.png")
    depth = Image.open(out / "train" / "000001_depth.png")
    assert rgb.mode == "RGB" and rgb.size == (160, 120)
    assert depth.mode == "L" and depth.size == (160, 120)
    manifest = json.loads(files["manifest.json"])
    assert manifest["split_counts"]["train"] == 3
    doc = load_coco(out / "annotations_train.json")
    assert [i["id"] for i in doc.images] == [1, 2, 3]


def test_generate_deterministic_and_worker_independent(small_dataset, tmp_path):
    out, _ = small_dataset
    cfg = _write_cfg(tmp_path)
    again = tmp_path / "again"
    res = CliRunner().invoke(main, ["generate", "--config", str(cfg), "--out", str(again), "--workers", "2"])
    assert res.exit_code == 0, res.output
    assert _tree_bytes(out) == _tree_bytes(again)


def test_seed_changes_output(small_dataset, tmp_path):
    out, _ = small_dataset
    other = tmp_path / "other"
    res = CliRunner().invoke(main, ["generate", "--config", str(_write_cfg(tmp_path)), "--seed", "6", "--out", str(other)])
    assert res.exit_code == 0
    assert _tree_bytes(out)["train/000001_rgb.png"] != _tree_bytes(other)["train/000001_rgb.png"]


def test_threads_env_caps_workers(monkeypatch):
    monkeypatch.setenv("SYLVANGEN_THREADS", "2")
    assert effective_workers(8) == 2
    monkeypatch.delenv("SYLVANGEN_THREADS")
    assert effective_workers(8) == 8


def test_bad_config_rejected(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"n_scenes": 1, "bogus": 2}))
    res = CliRunner().invoke(main, ["generate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert res.exit_code != 0 and "bogus" in res.output
    p.write_text(json.dumps({"weather_weights": {"clear": 0.0}}))
    res = CliRunner().invoke(main, ["generate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert res.exit_code != 0


def test_config_roundtrip():
    cfg = GenerateConfig.from_dict(SMALL)
    assert GenerateConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_eval_self_is_100(small_dataset, tmp_path):
    out, _ = small_dataset
    gt = out / "annotations_train.json"
    preds = tmp_path / "p.json"
    write_results(annotations_to_results(load_coco(gt)), preds)
    res = CliRunner().invoke(main, ["eval", "--gt", str(gt), "--pred", str(preds), "--out-dir", str(tmp_path / "ev")])
    assert res.exit_code == 0, res.output
    rep = json.loads((tmp_path / "ev" / "report.json").read_text())
    for task in ("bbox", "segm", "keypoints"):
        if rep["ap"][task]["AP"] is not None:
            assert rep["ap"][task]["AP"] == 100.0
    assert (tmp_path / "ev" / "keypoint_density.csv").exists()


def _two_gt_fixture(tmp_path):
    from sylvangen.annotate import Annotation
    from sylvangen.rle import mask_to_rle

    anns = []
    for n, x in enumerate((2, 20), start=1):
        m = np.zeros((40, 40), dtype=np.uint8)
        m[2:10, x:x + 8] = 1
        anns.append(Annotation(1, n, (x, 2, 8, 8), 64, mask_to_rle(m), [x + 1.0, 3.0, 2] + [0.0] * 12, 1, 4.0,
                               annotation_id=n))
    doc = CocoDocument(images=[{"id": 1, "file_name": "x.png", "width": 40, "height": 40}], annotations=anns)
    gt = write_coco(doc, tmp_path / "gt.json")
    return gt, doc


def test_eval_one_missed_of_two(tmp_path):
    gt, doc = _two_gt_fixture(tmp_path)
    preds = tmp_path / "p.json"
    write_results(annotations_to_results(CocoDocument(images=doc.images, annotations=doc.annotations[:1])), preds)
    res = CliRunner().invoke(main, ["eval", "--gt", str(gt), "--pred", str(preds), "--task", "bbox"])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output.strip().splitlines()[-1])
    assert rep["ap"]["bbox"]["AP50"] == pytest.approx(5100 / 101, abs=1e-12)


def test_eval_empty_predictions(tmp_path):
    gt, _ = _two_gt_fixture(tmp_path)
    preds = tmp_path / "p.json"
    preds.write_text("[]")
    res = CliRunner().invoke(main, ["eval", "--gt", str(gt), "--pred", str(preds), "--task", "bbox"])
    assert res.exit_code == 0
    assert json.loads(res.output.strip().splitlines()[-1])["ap"]["bbox"]["AP"] == 0.0


def test_eval_format_error_exit_code(tmp_path):
    gt, _ = _two_gt_fixture(tmp_path)
    preds = tmp_path / "p.json"
    preds.write_text('[\n{"image_id": 9999, "score": 0.5, "bbox": [0, 0, 1, 1]}\n]')
    res = CliRunner().invoke(main, ["eval", "--gt", str(gt), "--pred", str(preds)])
    assert res.exit_code == 2
    assert "line 2" in res.output


def test_stats_counts(small_dataset):
    out, _ = small_dataset
    gt = out / "annotations_train.json"
    res = CliRunner().invoke(main, ["stats", "--gt", str(gt), "--json"])
    assert res.exit_code == 0
    s = json.loads(res.output)
    doc = load_coco(gt)
    assert s["images"] == 3 and s["annotations"] == len(doc.annotations)
    for r in s["keypoint_rates"].values():
        assert 0.0 <= r["visible"] <= r["labelled"] <= 1.0
    assert sum(s["distance_histogram"]["counts"]) == len(doc.annotations)
    text = CliRunner().invoke(main, ["stats", "--gt", str(gt)]).output
    assert "felling_cut" in text


def test_stats_empty(tmp_path):
    gt = write_coco(CocoDocument(), tmp_path / "empty.json")
    res = CliRunner().invoke(main, ["stats", "--gt", str(gt), "--json"])
    assert res.exit_code == 0
    s = json.loads(res.output)
    assert s["images"] == 0 and s["annotations"] == 0


def test_inspect_writes_overlay(small_dataset, tmp_path):
    out, _ = small_dataset
    gt = out / "annotations_train.json"
    doc = load_coco(gt)
    image_id = max(doc.images, key=lambda i: len(doc.annotations_for(i["id"])))["id"]
    dst = tmp_path / "ov.png"
    res = CliRunner().invoke(main, ["inspect", "--gt", str(gt), "--image-id", str(image_id), "--out", str(dst)])
    assert res.exit_code == 0, res.output
    assert Image.open(dst).size == (160, 120)
    res = CliRunner().invoke(main, ["inspect", "--gt", str(gt), "--image-id", "999", "--out", str(dst)])
    assert res.exit_code != 0


def test_inspect_terrain(tmp_path):
    dst = tmp_path / "t.png"
    res = CliRunner().invoke(main, ["inspect", "--terrain-seed", "4", "--out", str(dst)])
    assert res.exit_code == 0
    assert Image.open(dst).mode in ("I;16", "I")


def test_overlay_no_annotations_is_copy():
    rgb = np.random.default_rng(0).integers(0, 256, (30, 40, 3), dtype=np.uint8)
    out = draw_overlay(rgb, [])
    assert np.array_equal(out, rgb) and out is not rgb


def test_overlay_boxes_and_keypoints():
    from sylvangen.annotate import Annotation
    from sylvangen.rle import mask_to_rle

    rgb = np.zeros((60, 80, 3), dtype=np.uint8)
    anns = []
    for n, (x, y) in enumerate([(5, 5), (30, 10), (55, 30)]):
        m = np.zeros((60, 80), dtype=np.uint8)
        m[y:y + 12, x:x + 10] = 1
        kps = [x + 4.6, y + 5.2, 2, x + 1.0, y + 11.0, 1, x + 9.0, y + 11.0, 2, 0, 0, 0, 0, 0, 0]
        anns.append(Annotation(1, n + 1, (x, y, 10, 12), 120, mask_to_rle(m), kps, 3, 5.0, annotation_id=n + 1))
    out = draw_overlay(rgb, anns)
    colours = {tuple(c) for c in out.reshape(-1, 3).tolist()}
    for n in range(3):
        assert annotation_color(n) in colours
    for a in anns:
        x, y, w, h = a.bbox
        assert tuple(out[y, x + 3]) == annotation_color(anns.index(a))
        for k in range(5):
            px, py, v = a.keypoints[3 * k:3 * k + 3]
            if v > 0:
                assert tuple(out[int(np.floor(py)), int(np.floor(px))]) == KEYPOINT_COLOR
