import math

import numpy as np
import pytest

from sylvangen.forest import TreeInstance
from sylvangen.terrain import TerrainGrid


def make_tree(tree_id=1, x=0.0, y=0.0, z=0.0, dbh=0.4, height=18.0, lean=0.0, lean_axis=(1.0, 0.0),
              crown_radius=2.5, crown_height=8.0, species=0, **kw) -> TreeInstance:
    return TreeInstance(
        id=tree_id,
        base_position=(x, y, z),
        species=species,
        trunk_height=height,
        dbh=dbh,
        lean_axis=lean_axis,
        lean_angle=lean,
        crown_radius=crown_radius,
        crown_height=crown_height,
        color_variation=0.5,
        **kw,
    )


def flat_grid(size_m=40.0, cell=0.5, z=0.0) -> TerrainGrid:
    n = int(round(size_m / cell)) + 1
    return TerrainGrid.from_heights(np.full((n, n), z, dtype=np.float64), cell)


@pytest.fixture
def flat40():
    return flat_grid()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for _, (_, line) in sorted(results.items()):
            terminalreporter.write_line(line)


__all__ = ["make_tree", "flat_grid", "math"]
