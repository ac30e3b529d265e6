"""Tree and understorey placement plus felling keypoints.

Trees are scattered by dart throwing: uniform candidates are accepted only
if they pass the altitude, slope, spacing and neighbour-count rules, in a
single sequential RNG stream so the result is a pure function of the seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .seeding import rng_from
from .species import SpeciesTemplate, default_species_table
from .terrain import TerrainGrid, sample_height, sample_heights, slope_at

# height of the felling cut above the tree base
FELLING_CUT_HEIGHT = 0.10
MAX_LEAN = 0.25

KEYPOINT_NAMES = ("felling_cut", "diameter_left", "diameter_right", "middle", "top")
KEYPOINT_SKELETON = ((1, 4), (4, 5), (2, 3))


class PropKind(enum.IntEnum):
    GRASS = 0
    STUMP = 1
    SCRUB = 2
    BRANCH = 3


@dataclass(frozen=True)
class TreeInstance:
    id: int
    base_position: tuple[float, float, float]
    species: int
    trunk_height: float
    dbh: float
    lean_axis: tuple[float, float]
    lean_angle: float
    crown_radius: float
    crown_height: float
    color_variation: float
    n_lobes: int = 4
    lobe_phase: float = 0.0

    def __post_init__(self) -> None:
        if self.trunk_height <= 0 or self.dbh <= 0:
            raise ParameterError("trunk_height and dbh must be positive")
        if not (0.0 <= self.lean_angle <= MAX_LEAN):
            raise ParameterError(f"lean_angle must lie in [0, {MAX_LEAN}]")
        if abs(math.hypot(*self.lean_axis) - 1.0) > 1e-9:
            raise ParameterError("lean_axis must be a unit vector")
        if self.crown_height >= self.trunk_height:
            raise ParameterError("crown_height must be below trunk_height")

    @property
    def axis(self) -> np.ndarray:
        """Unit trunk direction, tilted ``lean_angle`` towards ``lean_axis``."""
        s = math.sin(self.lean_angle)
        return np.array([s * self.lean_axis[0], s * self.lean_axis[1], math.cos(self.lean_angle)])

    def point_on_axis(self, h: float) -> np.ndarray:
        return np.asarray(self.base_position, dtype=np.float64) + h * self.axis

    def radius_at(self, h: float) -> float:
        """Trunk radius at axial height ``h``: dbh/2 at the cut, tapering linearly to dbh/6 at the top."""
        r_cut = self.dbh / 2.0
        r_top = self.dbh / 6.0
        t = (h - FELLING_CUT_HEIGHT) / (self.trunk_height - FELLING_CUT_HEIGHT)
        return r_cut + (r_top - r_cut) * t


@dataclass(frozen=True)
class PropInstance:
    kind: PropKind
    position: tuple[float, float, float]
    scale: float
    yaw: float

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ParameterError("prop scale must be positive")


@dataclass(frozen=True)
class SpawnRules:
    altitude_range: tuple[float, float] = (-1000.0, 1000.0)
    max_slope: float = 0.6
    neighbor_radius: float = 4.0
    max_neighbors: int = 6
    target_density: float = 500.0
    min_spacing: float = 1.2

    def validate(self) -> None:
        if self.min_spacing <= 0:
            raise ParameterError("min_spacing must be positive")
        lo, hi = self.altitude_range
        if lo > hi:
            raise ParameterError("altitude_range must be ordered (lo <= hi)")
        if self.target_density < 0 or self.neighbor_radius < 0 or self.max_neighbors < 0:
            raise ParameterError("densities, radii and counts must be non-negative")


DEFAULT_UNDERSTOREY = {
    PropKind.GRASS: 1500.0,
    PropKind.STUMP: 40.0,
    PropKind.SCRUB: 250.0,
    PropKind.BRANCH: 200.0,
}


class _SpatialHash:
    def __init__(self, cell: float):
        self.cell = cell
        self.buckets: dict[tuple[int, int], list[tuple[float, float]]] = {}

    def _key(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.cell)), int(math.floor(y / self.cell)))

    def add(self, x: float, y: float) -> None:
        self.buckets.setdefault(self._key(x, y), []).append((x, y))

    def near(self, x: float, y: float):
        kx, ky = self._key(x, y)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                yield from self.buckets.get((kx + dx, ky + dy), ())


def spawn_predicates(
    grid: TerrainGrid, rules: SpawnRules, x: float, y: float, accepted_xy
) -> tuple[bool, bool, bool, bool]:
    """Evaluate (altitude, slope, spacing, neighbours) rules for one candidate.

    ``accepted_xy`` is any iterable of previously accepted positions; only
    ones within range matter.
    """
    z = sample_height(grid, x, y)
    lo, hi = rules.altitude_range
    altitude_ok = lo <= z <= hi
    slope_ok = slope_at(grid, x, y) <= rules.max_slope
    spacing_ok = True
    neighbors = 0
    for ax, ay in accepted_xy:
        d = math.hypot(ax - x, ay - y)
        if d < rules.min_spacing:
            spacing_ok = False
        if d <= rules.neighbor_radius:
            neighbors += 1
    return altitude_ok, slope_ok, spacing_ok, neighbors <= rules.max_neighbors


def _draw_tree(rng: np.random.Generator, tree_id: int, base: tuple[float, float, float],
               table: list[SpeciesTemplate]) -> TreeInstance:
    species = int(rng.integers(len(table)))
    tpl = table[species]
    trunk_height = float(rng.uniform(*tpl.trunk_height))
    dbh = float(rng.uniform(*tpl.dbh))
    crown_radius = float(rng.uniform(*tpl.crown_radius))
    crown_height = float(rng.uniform(*tpl.crown_fraction)) * trunk_height
    # most stems stand close to upright
    lean_angle = MAX_LEAN * float(rng.uniform()) ** 2
    phi = float(rng.uniform(0.0, 2.0 * math.pi))
    color_variation = float(rng.uniform())
    n_lobes = int(rng.integers(tpl.lobes[0], tpl.lobes[1] + 1))
    lobe_phase = float(rng.uniform(0.0, 2.0 * math.pi))
    return TreeInstance(
        id=tree_id,
        base_position=base,
        species=species,
        trunk_height=trunk_height,
        dbh=dbh,
        lean_axis=(math.cos(phi), math.sin(phi)),
        lean_angle=lean_angle,
        crown_radius=crown_radius,
        crown_height=crown_height,
        color_variation=color_variation,
        n_lobes=n_lobes,
        lobe_phase=lobe_phase,
    )


def place_trees(
    grid: TerrainGrid,
    rules: SpawnRules | None = None,
    species_table: list[SpeciesTemplate] | None = None,
    rng_seed: int = 0,
) -> list[TreeInstance]:
    """Scatter trees by dart throwing under the spawn rules.

    Stops once ``target_density * area`` trees are accepted or after
    ``64 * target`` candidates. Ids run from 1 in acceptance order.
    """
    rules = rules or SpawnRules()
    rules.validate()
    table = species_table or default_species_table()
    target = int(round(rules.target_density * grid.area_m2 / 10_000.0))
    if target == 0:
        return []
    rng = rng_from(rng_seed, "trees")
    margin = grid.cell_size
    x_lo, x_hi = margin, grid.extent_x - margin
    y_lo, y_hi = margin, grid.extent_y - margin
    index = _SpatialHash(max(rules.min_spacing, rules.neighbor_radius, 1e-6))
    trees: list[TreeInstance] = []
    lo, hi = rules.altitude_range
    for _ in range(64 * target):
        x = float(rng.uniform(x_lo, x_hi))
        y = float(rng.uniform(y_lo, y_hi))
        z = sample_height(grid, x, y)
        if not (lo <= z <= hi):
            continue
        if slope_at(grid, x, y) > rules.max_slope:
            continue
        spacing_ok = True
        neighbors = 0
        for ax, ay in index.near(x, y):
            d = math.hypot(ax - x, ay - y)
            if d < rules.min_spacing:
                spacing_ok = False
                break
            if d <= rules.neighbor_radius:
                neighbors += 1
        if not spacing_ok or neighbors > rules.max_neighbors:
            continue
        trees.append(_draw_tree(rng, len(trees) + 1, (x, y, z), table))
        index.add(x, y)
        if len(trees) >= target:
            break
    return trees


_PROP_SCALE = {
    PropKind.GRASS: (0.6, 1.4),
    PropKind.STUMP: (0.7, 1.3),
    PropKind.SCRUB: (0.6, 1.4),
    PropKind.BRANCH: (0.5, 1.5),
}


def place_understorey(
    grid: TerrainGrid,
    density_per_kind: dict | None = None,
    rng_seed: int = 0,
) -> list[PropInstance]:
    """Uniformly scatter ``floor(density * hectares)`` props of each kind."""
    densities = DEFAULT_UNDERSTOREY if density_per_kind is None else density_per_kind
    rng = rng_from(rng_seed, "understorey")
    hectares = grid.area_m2 / 10_000.0
    props: list[PropInstance] = []
    for kind in PropKind:
        density = float(densities.get(kind, densities.get(kind.name, 0.0)))
        if density < 0:
            raise ParameterError("understorey densities must be non-negative")
        count = int(math.floor(density * hectares + 1e-9))
        if count == 0:
            continue
        xs = rng.uniform(0.0, grid.extent_x, count)
        ys = rng.uniform(0.0, grid.extent_y, count)
        zs = sample_heights(grid, xs, ys)
        scales = rng.uniform(*_PROP_SCALE[kind], count)
        yaws = rng.uniform(0.0, 2.0 * math.pi, count)
        for x, y, z, s, yaw in zip(xs, ys, zs, scales, yaws):
            props.append(PropInstance(kind, (float(x), float(y), float(z)), float(s), float(yaw)))
    return props


def tree_keypoints_3d(tree: TreeInstance, view_dir) -> np.ndarray:
    """Five world-space keypoints in canonical order.

    Order: felling cut, diameter left, diameter right, middle, top. The
    diameter points sit on the trunk silhouette at cut height, offset by
    ``dbh/2`` along the horizontal perpendicular to ``view_dir``; "left"
    is the negative screen-x side for a viewer looking along ``view_dir``.
    """
    v = np.asarray(view_dir, dtype=np.float64)
    horiz = math.hypot(v[0], v[1])
    if horiz < 1e-12:
        raise DomainError("view_dir has no horizontal component")
    # screen-right for a z-up viewer looking along v
    right = np.array([v[1] / horiz, -v[0] / horiz, 0.0])
    cut = tree.point_on_axis(FELLING_CUT_HEIGHT)
    half = tree.dbh / 2.0
    return np.stack(
        [
            cut,
            cut - half * right,
            cut + half * right,
            tree.point_on_axis(tree.trunk_height / 2.0),
            tree.point_on_axis(tree.trunk_height),
        ]
    )


def inclination(keypoints: np.ndarray) -> float:
    """Angle of the cut-to-top axis from vertical."""
    d = np.asarray(keypoints[4]) - np.asarray(keypoints[0])
    return math.atan2(math.hypot(d[0], d[1]), d[2])
