"""Procedural heightfield and ground-texture layers.

Heights come from fractal value noise on an integer-hash lattice, so a
grid is a pure function of ``(seed, params)`` and reproduces bit-exactly.
Grid nodes sit at ``(j * cell_size, i * cell_size)`` for row ``i`` and
column ``j``; ``x`` runs along columns and ``y`` along rows.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, ParameterError


class Texture(enum.IntEnum):
    MOSS = 0
    ROOTS = 1
    MUD = 2


@dataclass(frozen=True)
class TerrainParams:
    size_m: float = 128.0
    cell_size: float = 0.5
    amplitude: float = 6.0
    octaves: int = 4
    base_frequency: float = 1.0 / 32.0

    def validate(self) -> None:
        if not (self.size_m > 0 and self.cell_size > 0):
            raise ParameterError("size_m and cell_size must be positive")
        if self.octaves < 1:
            raise ParameterError("octaves must be >= 1")
        if self.amplitude < 0 or not math.isfinite(self.amplitude):
            raise ParameterError("amplitude must be finite and non-negative")
        if self.base_frequency <= 0:
            raise ParameterError("base_frequency must be positive")
        if self.size_m / self.cell_size < 2:
            raise ParameterError("grid needs at least two cells per side")


@dataclass(frozen=True)
class TextureRules:
    """Thresholds for :func:`assign_textures`.

    ``mud_below=None`` means the 25th percentile of the grid's heights.
    """

    mud_below: float | None = None
    roots_slope_above: float = 0.35


@dataclass(frozen=True, eq=False)
class TerrainGrid:
    heights: np.ndarray
    cell_size: float
    texture_class: np.ndarray = field(default=None)  # type: ignore[assignment]
    seed: int = 0

    def __post_init__(self) -> None:
        h = np.ascontiguousarray(self.heights, dtype=np.float64)
        if h.ndim != 2 or min(h.shape) < 2:
            raise ParameterError("heights must be a 2-D array with at least 2x2 nodes")
        if not np.all(np.isfinite(h)):
            raise ParameterError("heights must be finite")
        if self.cell_size <= 0:
            raise ParameterError("cell_size must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)
        tex = self.texture_class
        if tex is None:
            tex = np.zeros(h.shape, dtype=np.uint8)
        tex = np.ascontiguousarray(tex, dtype=np.uint8)
        if tex.shape != h.shape:
            raise ParameterError("texture_class shape must match heights")
        tex.setflags(write=False)
        object.__setattr__(self, "texture_class", tex)

    @classmethod
    def from_heights(cls, heights, cell_size: float, seed: int = 0) -> "TerrainGrid":
        return cls(np.asarray(heights, dtype=np.float64), float(cell_size), seed=seed)

    @property
    def height_cells(self) -> int:
        return self.heights.shape[0]

    @property
    def width_cells(self) -> int:
        return self.heights.shape[1]

    @property
    def extent_x(self) -> float:
        return (self.width_cells - 1) * self.cell_size

    @property
    def extent_y(self) -> float:
        return (self.height_cells - 1) * self.cell_size

    @property
    def area_m2(self) -> float:
        return self.extent_x * self.extent_y

    def contains(self, x: float, y: float, margin: float = 0.0) -> bool:
        return (margin <= x <= self.extent_x - margin) and (margin <= y <= self.extent_y - margin)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TerrainGrid):
            return NotImplemented
        return (
            self.cell_size == other.cell_size
            and self.seed == other.seed
            and np.array_equal(self.heights, other.heights)
            and np.array_equal(self.texture_class, other.texture_class)
        )

    __hash__ = None  # type: ignore[assignment]


def _lattice_values(ix: np.ndarray, iy: np.ndarray, seed: int, octave: int) -> np.ndarray:
    """Hash integer lattice coordinates to values in [-1, 1)."""
    with np.errstate(over="ignore"):
        h = (ix.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)) ^ (
            iy.astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
        )
        h ^= np.uint64((seed * 0x165667B19E3779F9 + octave * 0x27D4EB2F165667C5) & ((1 << 64) - 1))
        h ^= h >> np.uint64(30)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(27)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(31)
    unit = (h >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return unit * 2.0 - 1.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def value_noise(x: np.ndarray, y: np.ndarray, seed: int, octave: int = 0) -> np.ndarray:
    """Single-octave value noise in [-1, 1] at lattice-space coordinates."""
    x0 = np.floor(x)
    y0 = np.floor(y)
    tx = _smoothstep(x - x0)
    ty = _smoothstep(y - y0)
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    v00 = _lattice_values(ix, iy, seed, octave)
    v10 = _lattice_values(ix + 1, iy, seed, octave)
    v01 = _lattice_values(ix, iy + 1, seed, octave)
    v11 = _lattice_values(ix + 1, iy + 1, seed, octave)
    a = v00 + (v10 - v00) * tx
    b = v01 + (v11 - v01) * tx
    return a + (b - a) * ty


def generate_heightmap(
    seed: int,
    params: TerrainParams | None = None,
    texture_rules: TextureRules | None = None,
) -> TerrainGrid:
    """Build a terrain grid of ``size_m x size_m`` from fractal value noise.

    Each of the ``octaves`` layers doubles the frequency and halves the
    amplitude of the previous one; the sum is normalised back into [-1, 1]
    before scaling by ``amplitude``, so ``max - min <= 2 * amplitude``.
    """
    params = params or TerrainParams()
    params.validate()
    n = int(round(params.size_m / params.cell_size)) + 1
    coords = np.arange(n, dtype=np.float64) * params.cell_size
    xs, ys = np.meshgrid(coords, coords)

    total = np.zeros_like(xs)
    weight_sum = 0.0
    freq = params.base_frequency
    weight = 1.0
    for octave in range(params.octaves):
        total += weight * value_noise(xs * freq, ys * freq, seed, octave)
        weight_sum += weight
        freq *= 2.0
        weight *= 0.5
    heights = params.amplitude * (total / weight_sum) + 0.0
    grid = TerrainGrid(heights, params.cell_size, seed=int(seed))
    return assign_textures(grid, texture_rules or TextureRules())


def sample_height(grid: TerrainGrid, x: float, y: float) -> float:
    """Bilinear height at world position ``(x, y)``."""
    if not grid.contains(x, y):
        raise DomainError(f"({x}, {y}) lies outside the terrain extent")
    return float(sample_heights(grid, np.array([x]), np.array([y]))[0])


def sample_heights(grid: TerrainGrid, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised bilinear height query; points are clamped to the grid."""
    h = grid.heights
    gx = np.clip(np.asarray(xs, dtype=np.float64) / grid.cell_size, 0.0, grid.width_cells - 1)
    gy = np.clip(np.asarray(ys, dtype=np.float64) / grid.cell_size, 0.0, grid.height_cells - 1)
    j0 = np.minimum(np.floor(gx).astype(np.int64), grid.width_cells - 2)
    i0 = np.minimum(np.floor(gy).astype(np.int64), grid.height_cells - 2)
    tx = gx - j0
    ty = gy - i0
    h00 = h[i0, j0]
    h01 = h[i0, j0 + 1]
    h10 = h[i0 + 1, j0]
    h11 = h[i0 + 1, j0 + 1]
    top = h00 + (h01 - h00) * tx
    bottom = h10 + (h11 - h10) * tx
    out = top + (bottom - top) * ty
    # exact node hits return the stored height untouched
    fx = np.floor(gx)
    fy = np.floor(gy)
    on_node = (gx == fx) & (gy == fy)
    return np.where(on_node, h[fy.astype(np.int64), fx.astype(np.int64)], out)


def slope_at(grid: TerrainGrid, x: float, y: float) -> float:
    """Slope angle in radians from central differences with step ``cell_size``."""
    c = grid.cell_size
    if not grid.contains(x, y, margin=c):
        raise DomainError(f"({x}, {y}) is closer than one cell to the terrain boundary")
    pts_x = np.array([x + c, x - c, x, x])
    pts_y = np.array([y, y, y + c, y - c])
    hx1, hx0, hy1, hy0 = sample_heights(grid, pts_x, pts_y)
    gx = (hx1 - hx0) / (2.0 * c)
    gy = (hy1 - hy0) / (2.0 * c)
    return math.atan(math.hypot(gx, gy))


def node_slopes(grid: TerrainGrid) -> np.ndarray:
    """Slope at every node: central differences inside, one-sided on the border."""
    gy, gx = np.gradient(grid.heights, grid.cell_size)
    return np.arctan(np.hypot(gx, gy))


def assign_textures(grid: TerrainGrid, rules: TextureRules | None = None) -> TerrainGrid:
    """Classify nodes: MUD below ``mud_below``, else ROOTS on steep ground, else MOSS."""
    rules = rules or TextureRules()
    mud_below = rules.mud_below
    if mud_below is None:
        mud_below = float(np.percentile(grid.heights, 25.0))
    slopes = node_slopes(grid)
    tex = np.full(grid.heights.shape, Texture.MOSS, dtype=np.uint8)
    tex[slopes >= rules.roots_slope_above] = Texture.ROOTS
    tex[grid.heights < mud_below] = Texture.MUD
    return replace(grid, texture_class=tex)


def heights_to_png16(grid: TerrainGrid, path) -> None:
    """Dump heights as a 16-bit grayscale PNG, row 0 at the top (north-up)."""
    from PIL import Image

    h = grid.heights
    lo, hi = float(h.min()), float(h.max())
    span = hi - lo if hi > lo else 1.0
    img = np.round((h - lo) / span * 65535.0).astype(np.uint16)
    # north (max y) at the top
    Image.fromarray(img[::-1].copy()).save(path)
