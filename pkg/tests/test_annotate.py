import math

import numpy as np
import pytest

from conftest import flat_grid, make_tree
from sylvangen.annotate import extract_instances, project_keypoints
from sylvangen.errors import ConsistencyError
from sylvangen.geometry import Scene
from sylvangen.pipeline import GenerateConfig, build_scene
from sylvangen.render import CameraConfig, CameraPose, Conditions, place_camera, render_frame
from sylvangen.rle import rle_decode

GRID = flat_grid(40.0)


def _cam(eye, yaw=math.pi / 2, pitch=0.0, size=200, fov=70.0):
    return CameraPose(eye, yaw, pitch, math.radians(fov), size, size)


def test_tree_beyond_radius_not_annotated():
    tree = make_tree(1, x=20.0, y=22.0 + 10.0, height=8.0, crown_height=3.0)
    scene = Scene(GRID, [tree], [])
    fr = render_frame(scene, _cam((20.0, 20.0, 1.6)), Conditions())
    assert (fr.instance_id == 1).sum() > 200
    assert extract_instances(fr, scene, radius_m=10.0) == []
    assert len(extract_instances(fr, scene, radius_m=13.0)) == 1


def test_fully_occluded_tree_not_annotated():
    occluder = make_tree(1, x=20.0, y=22.0, dbh=1.5, height=12.0, crown_height=3.0)
    hidden = make_tree(2, x=20.0, y=25.0, dbh=0.3, height=8.0, crown_height=3.0)
    scene = Scene(GRID, [occluder, hidden], [])
    fr = render_frame(scene, _cam((20.0, 20.0, 1.0), fov=10.0, size=100), Conditions())
    assert not (fr.instance_id == 2).any()
    anns = extract_instances(fr, scene)
    assert [a.instance_id for a in anns] == [1]


def test_unknown_id_raises():
    tree = make_tree(1, x=20.0, y=25.0, height=8.0, crown_height=3.0)
    scene = Scene(GRID, [tree], [])
    fr = render_frame(scene, _cam((20.0, 20.0, 1.6)), Conditions())
    other = Scene(GRID, [make_tree(5, x=20.0, y=25.0, height=8.0, crown_height=3.0)], [])
    with pytest.raises(ConsistencyError):
        extract_instances(fr, other)


def test_diameter_pixel_distance_pinhole():
    for dist, dbh in [(5.0, 0.4), (3.0, 0.25), (8.0, 0.6)]:
        tree = make_tree(1, x=20.0, y=20.0 + dist, dbh=dbh, height=8.0, crown_height=3.0)
        # eye at cut height so the cut sits on the optical axis
        cam = _cam((20.0, 20.0, 0.1), size=800)
        kp = project_keypoints(tree, cam, np.full((800, 800), np.inf))
        d_px = math.hypot(*(kp[2, :2] - kp[1, :2]))
        assert abs(d_px - cam.focal * dbh / dist) <= 1.0


def test_keypoint_behind_closer_trunk_is_occluded():
    near = make_tree(1, x=20.0, y=22.0, dbh=0.6, height=8.0, crown_height=3.0)
    far = make_tree(2, x=20.0, y=26.0, dbh=0.3, height=8.0, crown_height=3.0)
    scene = Scene(GRID, [near, far], [])
    cam = _cam((20.0, 20.0, 1.0))
    fr = render_frame(scene, cam, Conditions())
    kp_far = project_keypoints(far, cam, fr.depth_m)
    kp_near = project_keypoints(near, cam, fr.depth_m)
    assert kp_far[0, 2] == 1
    assert kp_near[0, 2] == 2


def test_top_above_frame():
    tree = make_tree(1, x=20.0, y=25.0, dbh=0.4, height=8.0, crown_height=3.0)
    scene = Scene(GRID, [tree], [])
    fr = render_frame(scene, _cam((20.0, 20.0, 1.6)), Conditions())
    (ann,) = extract_instances(fr, scene)
    kp = ann.keypoint_array()
    assert kp[4].tolist() == [0.0, 0.0, 0.0]
    assert ann.num_keypoints == 4
    assert kp[0, 2] == 2


def _census(fr, scene, radius=10.0, min_pixels=50):
    cam = np.asarray(fr.camera.position)
    out = []
    H, W = fr.instance_id.shape
    counts = {}
    for i in range(H):
        for j in range(W):
            t = int(fr.instance_id[i, j])
            if t:
                counts[t] = counts.get(t, 0) + 1
    for t, c in sorted(counts.items()):
        base = np.asarray(scene.tree(t).base_position)
        if c >= min_pixels and math.sqrt(((base - cam) ** 2).sum()) <= radius:
            out.append(t)
    return out


@pytest.fixture(scope="module")
def generated_frames():
    cfg = GenerateConfig(master_seed=3, terrain={"size_m": 48.0})
    scene = build_scene(cfg, 11)
    frames = []
    for s in range(6):
        cam = place_camera(scene.grid, s, CameraConfig(width=240, height=240), trees=scene.trees)
        frames.append(render_frame(scene, cam, Conditions(), frame_seed=s))
    return scene, frames


def test_census_matches_annotations(generated_frames):
    scene, frames = generated_frames
    total = 0
    for fr in frames:
        anns = extract_instances(fr, scene)
        assert [a.instance_id for a in anns] == _census(fr, scene)
        total += len(anns)
    assert total > 0


def test_annotation_invariants(generated_frames):
    scene, frames = generated_frames
    for fr in frames:
        H, W = fr.instance_id.shape
        for a in extract_instances(fr, scene):
            m = rle_decode(a.rle, H, W)
            assert np.array_equal(m, fr.instance_id == a.instance_id)
            ys, xs = np.nonzero(m)
            assert a.bbox == (xs.min(), ys.min(), xs.max() - xs.min() + 1, ys.max() - ys.min() + 1)
            assert a.area == int(m.sum())
            assert a.distance_m <= 10.0
            kp = a.keypoint_array()
            assert a.num_keypoints == int((kp[:, 2] > 0).sum())
            for x, y, v in kp:
                assert v in (0, 1, 2)
                if v == 2:
                    assert 0 <= x < W and 0 <= y < H


def test_trunk_only_masks(generated_frames):
    scene, frames = generated_frames
    for fr in frames:
        for a in extract_instances(fr, scene, trunk_only=True):
            m = rle_decode(a.rle).astype(bool)
            assert np.all(fr.surface[m] == 3)
