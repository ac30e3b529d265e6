import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import flat_grid, make_tree
from sylvangen.errors import DomainError, ParameterError
from sylvangen.forest import (
    FELLING_CUT_HEIGHT,
    PropKind,
    SpawnRules,
    inclination,
    place_trees,
    place_understorey,
    spawn_predicates,
    tree_keypoints_3d,
)
from sylvangen.geometry import TRUNK_BANDS, TRUNK_SEGMENTS, build_tree_geometry
from sylvangen.species import default_species_table, dump_species_table, load_species_table
from sylvangen.terrain import TerrainParams, generate_heightmap, sample_height, slope_at

ROUGH = TerrainParams(size_m=40.0, cell_size=0.5, amplitude=8.0, octaves=5, base_frequency=1 / 6)


def test_species_table_has_17_entries():
    table = default_species_table()
    assert len(table) == 17
    assert len({t.name for t in table}) == 17
    for t in table:
        t.validate()


def test_species_table_json_roundtrip(tmp_path):
    path = tmp_path / "species.json"
    dump_species_table(default_species_table(), path)
    assert load_species_table(path) == default_species_table()


def test_tree_rejects_bad_lean():
    with pytest.raises(ParameterError):
        make_tree(lean=0.3)
    with pytest.raises(ParameterError):
        make_tree(dbh=0.0)


def test_zero_max_slope_on_rough_terrain_is_empty():
    g = generate_heightmap(4, ROUGH)
    rules = SpawnRules(max_slope=0.0, target_density=500)
    assert place_trees(g, rules, rng_seed=1) == []


def _check_tree_invariants(grid, trees, rules):
    ids = [t.id for t in trees]
    assert len(set(ids)) == len(ids)
    for t in trees:
        x, y, z = t.base_position
        assert z == sample_height(grid, x, y)
        assert t.trunk_height > 0 and t.dbh > 0
        assert 0.0 <= t.lean_angle <= 0.25
        lo, hi = rules.altitude_range
        assert lo <= z <= hi
        assert slope_at(grid, x, y) <= rules.max_slope
    pts = np.array([t.base_position[:2] for t in trees])
    if len(pts) > 1:
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, np.inf)
        assert d.min() >= rules.min_spacing


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32), spacing=st.floats(0.5, 3.0), max_slope=st.floats(0.2, 1.2))
def test_placement_invariants(seed, spacing, max_slope):
    g = generate_heightmap(seed, TerrainParams(size_m=30, cell_size=0.5, amplitude=4, base_frequency=1 / 8))
    rules = SpawnRules(min_spacing=spacing, max_slope=max_slope, target_density=600, altitude_range=(-2.0, 3.0))
    trees = place_trees(g, rules, rng_seed=seed)
    _check_tree_invariants(g, trees, rules)


def test_every_accepted_tree_passed_rules_at_its_time():
    g = generate_heightmap(8, TerrainParams(size_m=40, cell_size=0.5, amplitude=5, base_frequency=1 / 8))
    rules = SpawnRules(max_neighbors=2, neighbor_radius=5.0, target_density=800, altitude_range=(-3, 3))
    trees = place_trees(g, rules, rng_seed=3)
    assert len(trees) > 10
    accepted = []
    for t in trees:
        x, y, _ = t.base_position
        assert all(spawn_predicates(g, rules, x, y, accepted))
        accepted.append((x, y))


def test_density_on_flat_hectare():
    g = flat_grid(100.0, 0.5)
    assert g.area_m2 == 10_000.0
    rules = SpawnRules(target_density=400, max_slope=math.pi / 2)
    counts = [len(place_trees(g, rules, rng_seed=s)) for s in range(20)]
    assert all(350 <= c <= 400 for c in counts), counts


def test_placement_deterministic():
    g = generate_heightmap(2, ROUGH)
    assert place_trees(g, rng_seed=5) == place_trees(g, rng_seed=5)


def test_understorey_zero_and_deterministic():
    g = flat_grid(100.0, 1.0)
    assert place_understorey(g, {k: 0.0 for k in PropKind}, 1) == []
    assert place_understorey(g, None, 9) == place_understorey(g, None, 9)


def test_understorey_exact_count():
    g = flat_grid(100.0, 1.0)
    props = place_understorey(g, {PropKind.GRASS: 1000.0}, 4)
    assert len(props) == 1000
    assert all(p.kind == PropKind.GRASS and p.scale > 0 for p in props)
    assert all(p.position[2] == 0.0 for p in props)


def test_understorey_on_surface():
    g = generate_heightmap(6, ROUGH)
    for p in place_understorey(g, {PropKind.STUMP: 200, PropKind.BRANCH: 100}, 2):
        assert p.position[2] == pytest.approx(sample_height(g, p.position[0], p.position[1]), abs=1e-12)


def test_upright_trunk_ring_centres_vertical():
    t = make_tree(x=3.0, y=-2.0, z=1.5)
    mesh = build_tree_geometry(t)
    rings = mesh.vertices[: (TRUNK_BANDS + 1) * TRUNK_SEGMENTS].reshape(TRUNK_BANDS + 1, TRUNK_SEGMENTS, 3)
    centres = rings.mean(axis=1)
    assert np.allclose(centres[:, 0], 3.0, atol=1e-12)
    assert np.allclose(centres[:, 1], -2.0, atol=1e-12)


def test_trunk_triangle_count_per_ring():
    mesh = build_tree_geometry(make_tree())
    trunk = mesh.part == 3
    assert trunk.sum() == 24 * TRUNK_BANDS
    assert np.all(trunk[: 24 * TRUNK_BANDS])


def _slice_polygon(mesh, z):
    """Points where trunk edges cross the horizontal plane at height z."""
    tris = mesh.triangles()[mesh.part == 3]
    pts = []
    for tri in tris:
        for a, b in itertools.combinations(tri, 2):
            if (a[2] - z) * (b[2] - z) < 0:
                s = (z - a[2]) / (b[2] - a[2])
                pts.append(a + s * (b - a))
    return np.array(pts)


@pytest.mark.parametrize("dbh", [0.2, 0.4, 0.75])
def test_cut_width_matches_dbh_within_chord_bound(dbh):
    t = make_tree(dbh=dbh)
    pts = _slice_polygon(build_tree_geometry(t), FELLING_CUT_HEIGHT)
    bound = dbh * (1 - math.cos(math.pi / 12))
    for ang in np.linspace(0, math.pi, 13):
        d = np.array([math.cos(ang), math.sin(ang)])
        proj = pts[:, :2] @ d
        width = proj.max() - proj.min()
        assert abs(width - dbh) <= bound + 1e-12


def test_keypoints_upright():
    t = make_tree(dbh=0.4, z=2.0)
    kp = tree_keypoints_3d(t, (0.6, 0.8, 0.0))
    assert np.linalg.norm(kp[2] - kp[1]) == pytest.approx(0.4, abs=1e-15)
    assert kp[1][2] == kp[2][2] == 2.0 + FELLING_CUT_HEIGHT
    assert inclination(kp) == 0.0


@pytest.mark.parametrize("lean", [0.1, 0.0, 0.25, 0.05])
def test_inclination_roundtrip(lean):
    t = make_tree(lean=lean, lean_axis=(math.cos(1.1), math.sin(1.1)))
    kp = tree_keypoints_3d(t, (1.0, 0.0, 0.0))
    assert abs(inclination(kp) - lean) <= 1e-12


def test_diameter_points_perpendicular_to_view():
    t = make_tree()
    v = np.array([0.3, -0.9, 0.1])
    kp = tree_keypoints_3d(t, v)
    d = kp[2] - kp[1]
    assert abs(d @ v) < 1e-12
    # right of the viewer: cross(view, d) points up
    assert np.cross(v, d)[2] < 0 or np.cross(d, v)[2] > 0


def test_keypoints_vertical_view_rejected():
    with pytest.raises(DomainError):
        tree_keypoints_3d(make_tree(), (0.0, 0.0, -1.0))
