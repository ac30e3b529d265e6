"""Procedural forest simulator for annotated RGB+depth tree-detection datasets."""

from .annotate import Annotation, extract_instances, project_keypoints
from .forest import PropInstance, SpawnRules, TreeInstance, place_trees, place_understorey, tree_keypoints_3d
from .geometry import Scene, build_tree_geometry
from .terrain import TerrainGrid, TerrainParams, assign_textures, generate_heightmap, sample_height, slope_at

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "PropInstance",
    "Scene",
    "SpawnRules",
    "TerrainGrid",
    "TerrainParams",
    "TreeInstance",
    "assign_textures",
    "build_tree_geometry",
    "extract_instances",
    "generate_heightmap",
    "place_trees",
    "place_understorey",
    "project_keypoints",
    "sample_height",
    "slope_at",
    "tree_keypoints_3d",
]
