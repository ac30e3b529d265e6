"""Triangle meshes for terrain, trees and understorey props."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .forest import PropInstance, PropKind, TreeInstance
from .species import SpeciesTemplate, default_species_table
from .terrain import TerrainGrid, Texture

TRUNK_SEGMENTS = 12
TRUNK_BANDS = 8
# trunk starts below the base so sloped ground never shows a gap
TRUNK_SINK = 0.3
LOBE_SLICES = 8
LOBE_STACKS = 6


class Part(enum.IntEnum):
    NONE = 0
    TERRAIN = 1
    PROP = 2
    TRUNK = 3
    CROWN = 4


TEXTURE_COLORS = {
    Texture.MOSS: (0.22, 0.34, 0.12),
    Texture.ROOTS: (0.36, 0.27, 0.17),
    Texture.MUD: (0.26, 0.20, 0.14),
}

PROP_COLORS = {
    PropKind.GRASS: (0.40, 0.50, 0.18),
    PropKind.STUMP: (0.42, 0.33, 0.22),
    PropKind.SCRUB: (0.18, 0.33, 0.12),
    PropKind.BRANCH: (0.33, 0.25, 0.17),
}


@dataclass
class Mesh:
    vertices: np.ndarray  # (N, 3) float64
    faces: np.ndarray  # (M, 3) int64
    colors: np.ndarray  # (M, 3) float32
    part: np.ndarray  # (M,) uint8
    instance_id: np.ndarray  # (M,) int64

    @property
    def n_triangles(self) -> int:
        return len(self.faces)

    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]


def _face_jitter(n: int, key: int, spread: float = 0.08) -> np.ndarray:
    """Deterministic per-face brightness multipliers in [1 - spread, 1 + spread]."""
    idx = np.arange(n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = (idx + np.uint64(key & 0xFFFFFFFF)) * np.uint64(0x9E3779B97F4A7C15)
        h ^= h >> np.uint64(29)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(32)
    u = (h & np.uint64(0xFFFF)).astype(np.float64) / 65535.0
    return 1.0 + spread * (2.0 * u - 1.0)


def _mesh(vertices, faces, color, part: Part, instance_id: int, key: int, spread: float = 0.08) -> Mesh:
    faces = np.asarray(faces, dtype=np.int64)
    m = len(faces)
    colors = np.clip(np.asarray(color, dtype=np.float64)[None, :] * _face_jitter(m, key, spread)[:, None], 0.0, 1.0)
    return Mesh(
        vertices=np.asarray(vertices, dtype=np.float64),
        faces=faces,
        colors=colors.astype(np.float32),
        part=np.full(m, int(part), dtype=np.uint8),
        instance_id=np.full(m, instance_id, dtype=np.int64),
    )


def merge_meshes(meshes: list[Mesh]) -> Mesh:
    if not meshes:
        return Mesh(
            np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3), dtype=np.float32),
            np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.int64),
        )
    offsets = np.cumsum([0] + [len(m.vertices) for m in meshes[:-1]])
    return Mesh(
        vertices=np.concatenate([m.vertices for m in meshes]),
        faces=np.concatenate([m.faces + off for m, off in zip(meshes, offsets)]),
        colors=np.concatenate([m.colors for m in meshes]),
        part=np.concatenate([m.part for m in meshes]),
        instance_id=np.concatenate([m.instance_id for m in meshes]),
    )


def _tube_faces(n_rings: int, segments: int) -> np.ndarray:
    """Two triangles per quad between consecutive rings of ``segments`` vertices."""
    faces = []
    for k in range(n_rings - 1):
        a0 = k * segments
        b0 = (k + 1) * segments
        for s in range(segments):
            s1 = (s + 1) % segments
            faces.append((a0 + s, a0 + s1, b0 + s1))
            faces.append((a0 + s, b0 + s1, b0 + s))
    return np.array(faces, dtype=np.int64).reshape(-1, 3)


_TRUNK_FACES = _tube_faces(TRUNK_BANDS + 1, TRUNK_SEGMENTS)


def lean_rotation(tree: TreeInstance) -> np.ndarray:
    """Rotation taking +z onto the tree axis (about the horizontal perpendicular to the lean)."""
    lx, ly = tree.lean_axis
    k = np.array([-ly, lx, 0.0])
    th = tree.lean_angle
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(th) * K + (1.0 - math.cos(th)) * (K @ K)


def _ellipsoid(center, rx: float, ry: float, rz: float, slices: int = LOBE_SLICES, stacks: int = LOBE_STACKS,
               phase: float = 0.0):
    verts = [(center[0], center[1], center[2] + rz)]
    for i in range(1, stacks):
        phi = math.pi * i / stacks
        sp, cp = math.sin(phi), math.cos(phi)
        for s in range(slices):
            th = phase + 2.0 * math.pi * s / slices
            verts.append((center[0] + rx * sp * math.cos(th), center[1] + ry * sp * math.sin(th), center[2] + rz * cp))
    verts.append((center[0], center[1], center[2] - rz))
    faces = []
    for s in range(slices):
        faces.append((0, 1 + s, 1 + (s + 1) % slices))
    faces.extend((_tube_faces(stacks - 1, slices) + 1).tolist())
    last = len(verts) - 1
    base = 1 + (stacks - 2) * slices
    for s in range(slices):
        faces.append((last, base + (s + 1) % slices, base + s))
    return np.array(verts), np.array(faces, dtype=np.int64)


def _crown_lobes(tree: TreeInstance, tpl: SpeciesTemplate):
    """Lobe (center, rx, rz) triples for a tree's crown."""
    n = tree.n_lobes
    H = tree.trunk_height
    ch = tree.crown_height
    cr = tree.crown_radius
    lobes = []
    if tpl.crown_shape == "conical":
        for i in range(n):
            t = (i + 0.5) / n
            h = H - ch + t * ch
            c = tree.point_on_axis(h)
            lobes.append((c, cr * (1.0 - 0.75 * t), 0.8 * ch / n + 0.2))
    else:
        c = tree.point_on_axis(H - 0.5 * ch)
        lobes.append((c, 0.7 * cr, 0.5 * ch))
        for k in range(n - 1):
            ang = tree.lobe_phase + 2.0 * math.pi * k / (n - 1)
            dz = (0.15 if k % 2 == 0 else -0.1) * ch
            ck = tree.point_on_axis(H - 0.5 * ch + dz)
            ck = ck + 0.5 * cr * np.array([math.cos(ang), math.sin(ang), 0.0])
            lobes.append((ck, 0.55 * cr, 0.35 * ch))
    return lobes


def build_tree_geometry(tree: TreeInstance, species_table: list[SpeciesTemplate] | None = None) -> Mesh:
    """Tapered, leaning trunk (12 x 8 quads) plus 3-6 ellipsoidal crown lobes.

    Trunk triangles come first, ``24 * TRUNK_BANDS`` of them, ring by ring.
    """
    table = species_table or default_species_table()
    tpl = table[tree.species % len(table)]
    rot = lean_rotation(tree)
    base = np.asarray(tree.base_position, dtype=np.float64)

    heights = np.linspace(-TRUNK_SINK, tree.trunk_height, TRUNK_BANDS + 1)
    ang = 2.0 * math.pi * np.arange(TRUNK_SEGMENTS) / TRUNK_SEGMENTS
    local = []
    for h in heights:
        r = tree.radius_at(h)
        local.append(np.stack([r * np.cos(ang), r * np.sin(ang), np.full(TRUNK_SEGMENTS, h)], axis=1))
    local = np.concatenate(local)
    trunk_verts = base[None, :] + local @ rot.T

    shade = 0.85 + 0.3 * tree.color_variation
    trunk = _mesh(trunk_verts, _TRUNK_FACES, np.array(tpl.bark_color) * shade, Part.TRUNK, tree.id, tree.id * 7919)

    meshes = [trunk]
    for k, (center, rx, rz) in enumerate(_crown_lobes(tree, tpl)):
        v, f = _ellipsoid(center, rx, rx, rz, phase=tree.lobe_phase + 0.4 * k)
        tint = np.array(tpl.foliage_color) * shade * (0.92 + 0.04 * (k % 3))
        meshes.append(_mesh(v, f, tint, Part.CROWN, tree.id, tree.id * 104729 + k, spread=0.12))
    return merge_meshes(meshes)


def build_terrain_geometry(grid: TerrainGrid) -> Mesh:
    ny, nx = grid.heights.shape
    c = grid.cell_size
    jj, ii = np.meshgrid(np.arange(nx), np.arange(ny))
    verts = np.stack([jj.ravel() * c, ii.ravel() * c, grid.heights.ravel()], axis=1)
    idx = np.arange(ny * nx).reshape(ny, nx)
    a = idx[:-1, :-1].ravel()
    b = idx[:-1, 1:].ravel()
    d = idx[1:, :-1].ravel()
    e = idx[1:, 1:].ravel()
    faces = np.empty((2 * len(a), 3), dtype=np.int64)
    faces[0::2] = np.stack([a, b, e], axis=1)
    faces[1::2] = np.stack([a, e, d], axis=1)
    tex = grid.texture_class[:-1, :-1].ravel()
    palette = np.array([TEXTURE_COLORS[t] for t in Texture], dtype=np.float64)
    cell_colors = np.repeat(palette[tex], 2, axis=0)
    jitter = _face_jitter(len(faces), grid.seed, spread=0.12)
    colors = np.clip(cell_colors * jitter[:, None], 0.0, 1.0).astype(np.float32)
    m = len(faces)
    return Mesh(verts, faces, colors, np.full(m, int(Part.TERRAIN), np.uint8), np.zeros(m, np.int64))


def _yaw_matrix(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def build_prop_geometry(prop: PropInstance, key: int = 0) -> Mesh:
    pos = np.asarray(prop.position, dtype=np.float64)
    rot = _yaw_matrix(prop.yaw)
    s = prop.scale
    color = PROP_COLORS[prop.kind]
    if prop.kind == PropKind.GRASS:
        h, w = 0.45 * s, 0.3 * s
        verts, faces = [], []
        for q in range(3):
            a = math.pi * q / 3.0
            dx, dy = w * math.cos(a), w * math.sin(a)
            o = len(verts)
            verts += [(-dx, -dy, -0.05), (dx, dy, -0.05), (dx * 0.6, dy * 0.6, h), (-dx * 0.6, -dy * 0.6, h)]
            faces += [(o, o + 1, o + 2), (o, o + 2, o + 3)]
        verts = np.array(verts)
    elif prop.kind == PropKind.STUMP:
        r, h, seg = 0.25 * s, 0.4 * s, 8
        ang = 2.0 * math.pi * np.arange(seg) / seg
        ring = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
        bottom = np.column_stack([ring, np.full(seg, -0.2)])
        top = np.column_stack([ring * 0.95, np.full(seg, h)])
        verts = np.concatenate([bottom, top, [[0.0, 0.0, h]]])
        faces = _tube_faces(2, seg).tolist() + [(2 * seg, seg + k, seg + (k + 1) % seg) for k in range(seg)]
    elif prop.kind == PropKind.SCRUB:
        verts, faces = _ellipsoid((0.0, 0.0, 0.35 * s), 0.75 * s, 0.6 * s, 0.55 * s, slices=8, stacks=4)
    else:
        L, t = 1.6 * s, 0.06 * s
        verts = np.array([(x, y, z) for x in (-L / 2, L / 2) for y in (-t, t) for z in (0.0, 2 * t)])
        verts[:, 2] += np.where(verts[:, 0] > 0, 0.15 * s, 0.0)
        faces = [(0, 1, 3), (0, 3, 2), (4, 6, 7), (4, 7, 5), (0, 4, 5), (0, 5, 1),
                 (2, 3, 7), (2, 7, 6), (0, 2, 6), (0, 6, 4), (1, 5, 7), (1, 7, 3)]
    verts = pos[None, :] + np.asarray(verts, dtype=np.float64) @ rot.T
    return _mesh(verts, faces, color, Part.PROP, 0, key + 31 * int(prop.kind))


@dataclass(eq=False)
class Scene:
    grid: TerrainGrid | None
    trees: list[TreeInstance] = field(default_factory=list)
    props: list[PropInstance] = field(default_factory=list)
    species_table: list[SpeciesTemplate] | None = None

    def __post_init__(self) -> None:
        ids = [t.id for t in self.trees]
        if len(set(ids)) != len(ids) or any(i <= 0 for i in ids):
            raise ValueError("tree ids must be unique positive integers")
        self._tree_by_id = {t.id: t for t in self.trees}
        self._cache: dict = {}

    def tree(self, tree_id: int) -> TreeInstance:
        return self._tree_by_id[tree_id]

    def has_tree(self, tree_id: int) -> bool:
        return tree_id in self._tree_by_id

    @cached_property
    def tree_meshes(self) -> list[Mesh]:
        return [build_tree_geometry(t, self.species_table) for t in self.trees]

    @cached_property
    def mesh(self) -> Mesh:
        parts = []
        if self.grid is not None:
            parts.append(build_terrain_geometry(self.grid))
        parts.extend(self.tree_meshes)
        parts.extend(build_prop_geometry(p, key=i) for i, p in enumerate(self.props))
        return merge_meshes(parts)

    @cached_property
    def triangles(self) -> np.ndarray:
        return np.ascontiguousarray(self.mesh.triangles())

    @cached_property
    def normals(self) -> np.ndarray:
        tri = self.triangles
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return np.ascontiguousarray(n / np.where(norm > 0, norm, 1.0))
