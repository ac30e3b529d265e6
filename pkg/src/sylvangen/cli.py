"""Command-line entry point: generate, eval, stats, inspect."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .dataset import load_coco, load_predictions
from .errors import ConfigurationError, FormatError, ParameterError


def _parse_resolution(ctx, param, value):
    if value is None:
        return None
    try:
        w, h = (int(v) for v in value.lower().split("x"))
    except ValueError:
        raise click.BadParameter("expected WxH, e.g. 800x800") from None
    return (w, h)


def _parse_frames(ctx, param, value):
    if value is None:
        return None
    try:
        if "-" in value:
            lo, hi = (int(v) for v in value.split("-"))
        else:
            lo = hi = int(value)
    except ValueError:
        raise click.BadParameter("expected N or LO-HI") from None
    return (lo, hi)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Procedural forest dataset generator and COCO-style evaluator."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
@click.option("--seed", type=int, help="Master seed.")
@click.option("--scenes", type=int, help="Number of scenes.")
@click.option("--frames", callback=_parse_frames, help="Frames per scene: N or LO-HI (default 200-1000).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--resolution", callback=_parse_resolution, help="Image size WxH (default 800x800).")
@click.option("--workers", type=int, help="Worker processes (capped by SYLVANGEN_THREADS).")
@click.option("--debug-ids", is_flag=True, default=None, help="Also write 16-bit instance-id PNGs.")
def generate(config_path, seed, scenes, frames, out_dir, resolution, workers, debug_ids) -> None:
    """Generate an annotated RGB+depth dataset."""
    from .pipeline import GenerateConfig, generate as run

    try:
        cfg = GenerateConfig.from_file(config_path) if config_path else GenerateConfig()
    except (ParameterError, json.JSONDecodeError, TypeError) as exc:
        raise click.ClickException(f"bad config: {exc}") from exc
    overrides = {
        "master_seed": seed, "n_scenes": scenes, "frames_per_scene_range": frames, "out_dir": out_dir,
        "resolution": resolution, "workers": workers, "debug_ids": debug_ids,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)

    def progress(done, total):
        if done == total or done % 50 == 0:
            click.echo(f"  {done}/{total} frames", err=True)

    try:
        result = run(cfg, progress=progress)
    except (ParameterError, ConfigurationError) as exc:
        raise click.ClickException(str(exc)) from exc
    except OSError as exc:
        raise click.ClickException(
            f"I/O error: {exc}. Partial output may remain in {cfg.out_dir}; remove it before retrying."
        ) from exc
    counts = ", ".join(f"{k}={v}" for k, v in result.manifest.split_counts.items())
    click.echo(f"frames: {result.n_frames} ({counts})")
    click.echo(f"annotations: {result.n_annotations}")
    click.echo(f"elapsed: {result.elapsed_s:.1f} s, throughput: {result.frames_per_minute:.1f} frames/min")


@main.command("eval")
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--task", "tasks", multiple=True, type=click.Choice(["bbox", "segm", "keypoints"]),
              help="Task(s) to score; repeatable. Defaults to every task the predictions support.")
@click.option("--out-dir", type=click.Path(file_okay=False), help="Write report.json and keypoint_density.csv here.")
def eval_cmd(gt_path, pred_path, tasks, out_dir) -> None:
    """Score predictions against ground truth with COCO-style AP."""
    from .evaluation.report import available_tasks, evaluate, format_report, write_density_csv, write_report_json

    try:
        gt = load_coco(gt_path)
        preds = load_predictions(pred_path, gt)
        tasks = list(tasks) or available_tasks(preds)
        if not tasks:
            raise FormatError("predictions share no common payload (bbox, segmentation or keypoints)")
        report = evaluate(gt, preds, tasks)
    except FormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(2)
    click.echo(format_report(report), nl=False)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_report_json(report, out / "report.json")
        if report.keypoint_stats is not None:
            write_density_csv(report.keypoint_stats, out / "keypoint_density.csv")
    else:
        click.echo(json.dumps(report.to_dict()))


@main.command()
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print machine-readable JSON.")
def stats(gt_path, as_json) -> None:
    """Print dataset statistics for a COCO ground-truth file."""
    from .stats import dataset_stats, format_stats

    try:
        doc = load_coco(gt_path)
    except FormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(2)
    s = dataset_stats(doc)
    click.echo(json.dumps(s, indent=2) if as_json else format_stats(s), nl=as_json)


@main.command()
@click.option("--gt", "gt_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--image-id", type=int)
@click.option("--terrain-seed", type=int, help="Instead of an image, dump a terrain heightmap as 16-bit PNG.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def inspect(gt_path, image_id, terrain_seed, out_path) -> None:
    """Draw annotations over a frame, or dump a terrain heightmap."""
    if terrain_seed is not None:
        from .terrain import generate_heightmap, heights_to_png16

        heights_to_png16(generate_heightmap(terrain_seed), out_path)
        click.echo(f"wrote {out_path}")
        return
    if gt_path is None or image_id is None:
        raise click.UsageError("--gt and --image-id are required unless --terrain-seed is given")
    from .overlay import inspect_image

    try:
        doc = load_coco(gt_path)
        n = inspect_image(doc, image_id, Path(gt_path).parent, out_path)
    except FormatError as exc:
        click.echo(f"format error: {exc}", err=True)
        sys.exit(2)
    except KeyError as exc:
        raise click.ClickException(str(exc.args[0])) from exc
    click.echo(f"wrote {out_path} ({n} annotations)")


if __name__ == "__main__":
    main()
