"""End-to-end dataset generation.

Seeds form a hierarchy: ``master -> scene -> frame``. Each frame is an
independent job (camera, conditions and precipitation all derive from its
seed), so output does not depend on how jobs are spread over workers.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .annotate import Annotation, extract_instances
from .dataset import (
    DEFAULT_FRAME_RANGE,
    SPLITS,
    CocoDocument,
    DatasetManifest,
    SceneEntry,
    image_record,
    split_dataset,
    write_coco,
    write_frame_images,
    write_stable_json,
)
from .errors import ParameterError
from .forest import PropKind, SpawnRules, place_trees, place_understorey, DEFAULT_UNDERSTOREY
from .geometry import Scene
from .render import CameraConfig, place_camera, render_frame, sample_conditions
from .render.conditions import DEFAULT_TIME_WEIGHTS, DEFAULT_WEATHER_WEIGHTS
from .seeding import derive_seed, rng_from
from .species import default_species_table, load_species_table
from .terrain import TerrainParams, generate_heightmap

log = logging.getLogger(__name__)

THREADS_ENV = "SYLVANGEN_THREADS"


@dataclass
class GenerateConfig:
    master_seed: int = 0
    n_scenes: int = 1
    frames_per_scene_range: tuple[int, int] = DEFAULT_FRAME_RANGE
    resolution: tuple[int, int] = (800, 800)  # width, height
    d_max: float = 30.0
    annotation_radius: float = 10.0
    min_pixels: int = 50
    trunk_only: bool = False
    time_weights: dict = field(default_factory=lambda: dict(DEFAULT_TIME_WEIGHTS))
    weather_weights: dict = field(default_factory=lambda: dict(DEFAULT_WEATHER_WEIGHTS))
    out_dir: str = "dataset"
    workers: int = 1
    terrain: dict = field(default_factory=dict)
    spawn: dict = field(default_factory=dict)
    understorey: dict = field(default_factory=lambda: {k.name: v for k, v in DEFAULT_UNDERSTOREY.items()})
    camera: dict = field(default_factory=dict)
    species_file: str | None = None
    debug_ids: bool = False

    def validate(self) -> None:
        lo, hi = self.frames_per_scene_range
        if not (1 <= lo <= hi):
            raise ParameterError("frames_per_scene_range must satisfy 1 <= lo <= hi")
        if self.n_scenes < 1:
            raise ParameterError("n_scenes must be >= 1")
        w, h = self.resolution
        if w <= 0 or h <= 0:
            raise ParameterError("resolution must be positive")
        if self.d_max <= 0 or self.annotation_radius <= 0:
            raise ParameterError("d_max and annotation_radius must be positive")
        for name in ("time_weights", "weather_weights"):
            weights = getattr(self, name)
            if any(v < 0 for v in weights.values()) or sum(weights.values()) <= 0:
                raise ParameterError(f"{name} must be non-negative and not all zero")
        self.terrain_params().validate()
        self.spawn_rules().validate()

    def terrain_params(self) -> TerrainParams:
        return TerrainParams(**self.terrain)

    def spawn_rules(self) -> SpawnRules:
        raw = dict(self.spawn)
        if "altitude_range" in raw:
            raw["altitude_range"] = tuple(raw["altitude_range"])
        return SpawnRules(**raw)

    def camera_config(self) -> CameraConfig:
        raw = dict(self.camera)
        if "vertical_fov_deg" in raw:
            raw["vertical_fov"] = math.radians(raw.pop("vertical_fov_deg"))
        for key in ("height_range", "pitch_range"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return CameraConfig(width=self.resolution[0], height=self.resolution[1], **raw)

    def understorey_densities(self) -> dict:
        return {PropKind[k]: float(v) for k, v in self.understorey.items()}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["frames_per_scene_range"] = list(self.frames_per_scene_range)
        d["resolution"] = list(self.resolution)
        # output location and parallelism do not affect content
        d.pop("out_dir")
        d.pop("workers")
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "GenerateConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        for key in ("frames_per_scene_range", "resolution"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "GenerateConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def scene_seed(master_seed: int, scene_index: int) -> int:
    return derive_seed(master_seed, "scene", scene_index)


def frame_seed(scene_seed_: int, frame_index: int) -> int:
    return derive_seed(scene_seed_, "frame", frame_index)


def scene_frame_count(config: GenerateConfig, seed: int) -> int:
    lo, hi = config.frames_per_scene_range
    return int(rng_from(seed, "frame_count").integers(lo, hi + 1))


def build_scene(config: GenerateConfig, seed: int) -> Scene:
    table = load_species_table(config.species_file) if config.species_file else default_species_table()
    grid = generate_heightmap(derive_seed(seed, "terrain"), config.terrain_params())
    trees = place_trees(grid, config.spawn_rules(), table, derive_seed(seed, "trees"))
    props = place_understorey(grid, config.understorey_densities(), derive_seed(seed, "props"))
    return Scene(grid, trees, props, table)


@dataclass
class FrameJob:
    scene_index: int
    scene_seed: int
    frame_index: int
    frame_id: int
    split: str


@dataclass
class FrameResult:
    frame_id: int
    split: str
    image: dict
    annotations: list[Annotation]


_SCENES: dict[int, Scene] = {}


def _scene_for(config: GenerateConfig, seed: int) -> Scene:
    scene = _SCENES.get(seed)
    if scene is None:
        _SCENES.clear()
        scene = _SCENES[seed] = build_scene(config, seed)
    return scene


def render_annotated_frame(config: GenerateConfig, job: FrameJob, scene: Scene | None = None):
    """Render, annotate and return ``(frame, annotations, image_record)`` for one job."""
    scene = scene or _scene_for(config, job.scene_seed)
    fseed = frame_seed(job.scene_seed, job.frame_index)
    camera = place_camera(scene.grid, derive_seed(fseed, "camera"), config.camera_config(), trees=scene.trees)
    conditions = sample_conditions(derive_seed(fseed, "conditions"), config.time_weights, config.weather_weights)
    frame = render_frame(scene, camera, conditions, frame_seed=fseed)
    anns = extract_instances(frame, scene, config.annotation_radius, config.min_pixels, job.frame_id,
                             config.trunk_only)
    image = image_record(frame, job.frame_id, job.split, scene_index=job.scene_index, frame_index=job.frame_index)
    return frame, anns, image


def _run_job(args) -> FrameResult:
    config, job = args
    frame, anns, image = render_annotated_frame(config, job)
    write_frame_images(frame, config.out_dir, job.split, job.frame_id, config.d_max, config.debug_ids)
    return FrameResult(job.frame_id, job.split, image, anns)


def effective_workers(requested: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = max(1, int(requested))
    if cap:
        n = min(n, max(1, int(cap)))
    return n


@dataclass
class GenerateResult:
    manifest: DatasetManifest
    n_frames: int
    n_annotations: int
    elapsed_s: float
    annotation_files: dict[str, Path]

    @property
    def frames_per_minute(self) -> float:
        return 60.0 * self.n_frames / self.elapsed_s if self.elapsed_s > 0 else float("inf")


def plan(config: GenerateConfig) -> tuple[DatasetManifest, list[FrameJob]]:
    scenes = []
    for k in range(config.n_scenes):
        seed = scene_seed(config.master_seed, k)
        scenes.append(SceneEntry(seed, scene_frame_count(config, seed)))
    manifest = DatasetManifest(config.master_seed, scenes, tuple(config.resolution), config=config.to_dict())
    if config.frames_per_scene_range == DEFAULT_FRAME_RANGE:
        manifest.validate()
    if len(scenes) >= len(SPLITS):
        labels = split_dataset(manifest)
    else:
        log.warning("fewer than %d scenes: every frame goes to the train split", len(SPLITS))
        labels = ["train"] * len(scenes)
    jobs = []
    frame_id = 1
    for k, (entry, label) in enumerate(zip(scenes, labels)):
        entry.split = label
        for f in range(entry.frame_count):
            jobs.append(FrameJob(k, entry.scene_seed, f, frame_id, label))
            frame_id += 1
    manifest.split_counts = {s: sum(e.frame_count for e in scenes if e.split == s) for s in SPLITS}
    return manifest, jobs


def generate(config: GenerateConfig, progress=None) -> GenerateResult:
    """Generate the dataset described by ``config`` under ``config.out_dir``."""
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest, jobs = plan(config)
    workers = effective_workers(config.workers)
    start = time.perf_counter()
    args = [(config, job) for job in jobs]
    results: list[FrameResult] = []
    if workers == 1:
        for a in args:
            results.append(_run_job(a))
            if progress:
                progress(len(results), len(jobs))
    else:
        chunk = max(1, min(16, len(jobs) // (4 * workers) or 1))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_job, args, chunksize=chunk):
                results.append(res)
                if progress:
                    progress(len(results), len(jobs))

    docs = {s: CocoDocument() for s in SPLITS}
    next_ann = 1
    for res in results:
        doc = docs[res.split]
        doc.images.append(res.image)
        for ann in res.annotations:
            ann.annotation_id = next_ann
            next_ann += 1
            doc.annotations.append(ann)
    files = {}
    for split, doc in docs.items():
        if doc.images:
            files[split] = write_coco(doc, out / f"annotations_{split}.json")
    write_stable_json(manifest.to_dict(), out / "manifest.json")
    elapsed = time.perf_counter() - start
    return GenerateResult(manifest, len(results), next_ann - 1, elapsed, files)
