"""Tree species templates.

Six base crown/bark models, each recoloured into variants, give the 17
templates trees are drawn from. Tables can be loaded from JSON files that
carry a ``schema_version`` field.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import FormatError

SCHEMA_VERSION = 1
CROWN_SHAPES = ("conical", "round")


@dataclass(frozen=True)
class SpeciesTemplate:
    name: str
    base_model: str
    crown_shape: str
    trunk_height: tuple[float, float]
    dbh: tuple[float, float]
    crown_radius: tuple[float, float]
    crown_fraction: tuple[float, float]
    lobes: tuple[int, int]
    bark_color: tuple[float, float, float]
    foliage_color: tuple[float, float, float]

    def validate(self) -> None:
        if self.crown_shape not in CROWN_SHAPES:
            raise FormatError(f"{self.name}: crown_shape must be one of {CROWN_SHAPES}")
        for attr in ("trunk_height", "dbh", "crown_radius", "crown_fraction"):
            lo, hi = getattr(self, attr)
            if not (0 < lo <= hi):
                raise FormatError(f"{self.name}: {attr} range must satisfy 0 < lo <= hi")
        if self.crown_fraction[1] >= 1.0:
            raise FormatError(f"{self.name}: crown_fraction must stay below 1")
        lo, hi = self.lobes
        if not (3 <= lo <= hi <= 6):
            raise FormatError(f"{self.name}: lobes must lie within [3, 6]")
        for attr in ("bark_color", "foliage_color"):
            col = getattr(self, attr)
            if len(col) != 3 or not all(0.0 <= c <= 1.0 for c in col):
                raise FormatError(f"{self.name}: {attr} must be three values in [0, 1]")


def _variants(base: dict, tints: list[tuple[str, tuple[float, float, float], tuple[float, float, float]]]):
    out = []
    for suffix, bark, foliage in tints:
        out.append(
            SpeciesTemplate(
                name=f"{base['base_model']}_{suffix}",
                bark_color=bark,
                foliage_color=foliage,
                **base,
            )
        )
    return out


def default_species_table() -> list[SpeciesTemplate]:
    fir = dict(base_model="fir", crown_shape="conical", trunk_height=(12.0, 22.0), dbh=(0.22, 0.55),
               crown_radius=(1.6, 2.6), crown_fraction=(0.45, 0.62), lobes=(5, 6))
    spruce = dict(base_model="spruce", crown_shape="conical", trunk_height=(14.0, 26.0), dbh=(0.25, 0.60),
                  crown_radius=(1.8, 3.0), crown_fraction=(0.45, 0.60), lobes=(5, 6))
    pine = dict(base_model="pine", crown_shape="round", trunk_height=(14.0, 24.0), dbh=(0.22, 0.50),
                crown_radius=(1.8, 3.0), crown_fraction=(0.25, 0.38), lobes=(3, 4))
    beech = dict(base_model="beech", crown_shape="round", trunk_height=(12.0, 22.0), dbh=(0.20, 0.60),
                 crown_radius=(2.5, 4.0), crown_fraction=(0.35, 0.55), lobes=(4, 6))
    birch = dict(base_model="birch", crown_shape="round", trunk_height=(10.0, 18.0), dbh=(0.15, 0.35),
                 crown_radius=(1.6, 2.8), crown_fraction=(0.35, 0.50), lobes=(3, 5))
    maple = dict(base_model="maple", crown_shape="round", trunk_height=(11.0, 20.0), dbh=(0.20, 0.50),
                 crown_radius=(2.4, 3.8), crown_fraction=(0.40, 0.55), lobes=(4, 6))
    table: list[SpeciesTemplate] = []
    table += _variants(fir, [
        ("dark", (0.30, 0.23, 0.18), (0.10, 0.24, 0.12)),
        ("blue", (0.34, 0.27, 0.22), (0.12, 0.25, 0.20)),
        ("pale", (0.38, 0.31, 0.25), (0.18, 0.32, 0.15)),
    ])
    table += _variants(spruce, [
        ("dark", (0.27, 0.20, 0.15), (0.08, 0.20, 0.10)),
        ("olive", (0.33, 0.25, 0.18), (0.17, 0.27, 0.10)),
        ("frost", (0.36, 0.30, 0.26), (0.20, 0.30, 0.24)),
    ])
    table += _variants(pine, [
        ("red", (0.45, 0.27, 0.17), (0.16, 0.30, 0.12)),
        ("grey", (0.36, 0.32, 0.28), (0.14, 0.26, 0.13)),
        ("sunlit", (0.48, 0.33, 0.21), (0.22, 0.36, 0.14)),
    ])
    table += _variants(beech, [
        ("summer", (0.52, 0.50, 0.46), (0.22, 0.40, 0.12)),
        ("autumn", (0.50, 0.47, 0.42), (0.55, 0.35, 0.10)),
        ("mossy", (0.40, 0.43, 0.33), (0.25, 0.42, 0.14)),
    ])
    table += _variants(birch, [
        ("white", (0.85, 0.83, 0.78), (0.30, 0.45, 0.15)),
        ("yellow", (0.80, 0.78, 0.72), (0.60, 0.55, 0.15)),
    ])
    table += _variants(maple, [
        ("green", (0.40, 0.35, 0.30), (0.20, 0.38, 0.12)),
        ("red", (0.38, 0.32, 0.28), (0.55, 0.18, 0.10)),
        ("amber", (0.42, 0.36, 0.30), (0.62, 0.42, 0.12)),
    ])
    return table


def _template_from_dict(raw: dict) -> SpeciesTemplate:
    names = {f.name for f in fields(SpeciesTemplate)}
    missing = names - raw.keys()
    if missing:
        raise FormatError(f"species entry missing fields: {sorted(missing)}")
    kwargs = {}
    for name in names:
        value = raw[name]
        kwargs[name] = tuple(value) if isinstance(value, list) else value
    tpl = SpeciesTemplate(**kwargs)
    tpl.validate()
    return tpl


def load_species_table(path: str | Path) -> list[SpeciesTemplate]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    entries = doc.get("species")
    if not isinstance(entries, list) or not entries:
        raise FormatError(f"{path}: 'species' must be a non-empty list")
    return [_template_from_dict(e) for e in entries]


def dump_species_table(table: list[SpeciesTemplate], path: str | Path) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "species": [asdict(t) for t in table]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
