"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 data error. Set SONOPAIR_LOG
to debug/info/warning to control log verbosity. Every command is
deterministic for a given config and seed; outputs carry no timestamps.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .config import (
    PHANTOM_KINDS,
    RunConfig,
    auto_regions,
    build_phantom,
    config_to_doc,
    load_config,
)
from .dataset import (
    export_for_training,
    load_manifest,
    manifest_grid,
    read_entry_patches,
    reconstruct,
    split_folds,
)
from .errors import ConfigError, DataError, ToolkitError
from .evaluate import RUN_META_FORMAT, evaluate_run
from .imaging import load_bmode, save_bmode, to_dataset_image, write_pgm
from .metrics import GLOBAL_SSIM, MetricsReport, SSIMParams, psnr_db, rmse, ssim
from .phantom import save_phantom, save_regions
from .scanner import simulate_pair, write_rf_frame

log = logging.getLogger("sonopair")

EXIT_CONFIG = 2
EXIT_DATA = 3


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except DataError as e:
            click.echo(f"data error: {e}", err=True)
            sys.exit(EXIT_DATA)
        except ToolkitError as e:  # safety net for future subclasses
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


@click.group()
def main():
    """Dual-frequency rotational ultrasound simulation toolkit."""
    level = os.environ.get("SONOPAIR_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    fields = {k: v for k, v in overrides.items() if v is not None}
    if not fields:
        return cfg
    return replace(cfg, **fields)


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML configuration file.")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Output directory for the simulated pair.")
@click.option("--seed", type=int, default=None, help="Override the root seed.")
@click.option("--phantom", "phantom_kind",
              type=click.Choice(PHANTOM_KINDS), default=None,
              help="Override the phantom kind.")
@click.option("--phantom-file", type=click.Path(), default=None,
              help="Phantom document for --phantom file.")
@click.option("--noise-sigma", type=float, default=None,
              help="Override the RF noise amplitude.")
@click.option("--density", "density_per_cell", type=float, default=None,
              help="Override scatterers per resolution cell.")
@click.option("--rf/--no-rf", "write_rf", default=True,
              help="Also write raw RF frames (needed by evaluate).")
@handle_errors
def simulate(config_path, out_dir, seed, phantom_kind, phantom_file,
             noise_sigma, density_per_cell, write_rf):
    """Simulate one co-registered low/high frequency image pair."""
    cfg = load_config(config_path)
    cfg = _apply_overrides(
        cfg,
        seed=seed,
        phantom_kind=phantom_kind,
        phantom_file=phantom_file,
        noise_sigma=noise_sigma,
        density_per_cell=density_per_cell,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene = build_phantom(cfg)
    log.info("phantom: %s scatterers, %d wires, %d pillars",
             scene.scatterer_count, len(scene.wires), len(scene.pillars))
    pair = simulate_pair(
        scene, cfg.geometry, cfg.low, cfg.high,
        noise_sigma=cfg.noise_sigma, seed=cfg.seed,
    )
    save_phantom(scene, out / "phantom.json")
    outputs = ["phantom.json", "regions.json", "meta.json"]
    for freq, frame in (("low", pair.low), ("high", pair.high)):
        image = to_dataset_image(
            frame,
            dynamic_range_db=cfg.dynamic_range_db,
            sound_speed_mps=cfg.medium.sound_speed_mps,
            seed=cfg.seed,
        )
        save_bmode(out / freq, image)
        outputs += [f"{freq}.pgm", f"{freq}.json"]
        if write_rf:
            write_rf_frame(out / f"{freq}.rff", frame)
            outputs.append(f"{freq}.rff")
    save_regions(auto_regions(cfg, scene), out / "regions.json")
    _write_json(out / "meta.json", {
        "format": RUN_META_FORMAT,
        "config": config_to_doc(cfg),
        "alignment": {
            "phase_offset_deg": pair.alignment.phase_offset_deg,
            "max_angle_error_deg": pair.alignment.max_angle_error_deg,
        },
        "outputs": sorted(outputs),
    })
    click.echo(json.dumps({
        "out": str(out),
        "seed": cfg.seed,
        "scanlines": cfg.geometry.scanlines_per_frame,
        "rf_samples": cfg.geometry.rf_samples_per_line,
        "scatterers": scene.scatterer_count,
    }, sort_keys=True))


@main.command()
@click.option("--run", "run_dir", type=click.Path(), required=True,
              help="A simulate output directory.")
@click.option("--regions", "regions_path", type=click.Path(), default=None,
              help="Regions file (defaults to <run>/regions.json).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Report path (defaults to <run>/report.json).")
@handle_errors
def evaluate(run_dir, regions_path, out_path):
    """Measure resolution/eSNR/CNR/SSNR on a simulated pair."""
    report = evaluate_run(run_dir, regions_path)
    out = Path(out_path) if out_path else Path(run_dir) / "report.json"
    _write_json(out, report)
    click.echo(json.dumps(report, indent=1, sort_keys=True))


@main.command()
@click.option("--run", "run_dir", type=click.Path(), required=True,
              help="A simulate output directory (low/high images).")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--id", "source_id", default=None,
              help="Source id for filenames (defaults to the run dir name).")
@handle_errors
def patchify(run_dir, out_dir, source_id):
    """Cut one image pair into overlapping training patches."""
    run = Path(run_dir)
    source_id = source_id or run.name
    from .imaging import ImagePair  # local import to keep startup light

    pair = ImagePair(low=load_bmode(run / "low"), high=load_bmode(run / "high"))
    manifest = export_for_training(
        [(source_id, pair)], split_folds(1, 1, 0), out_dir
    )
    click.echo(json.dumps({"manifest": str(manifest)}))


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--patches-dir", type=click.Path(), default=None,
              help="Directory of patch files (defaults to the manifest dir).")
@click.option("--frequency", type=click.Choice(["low", "high"]), default="high")
@click.option("--blend", type=click.Choice(["mean", "feather"]), default="mean")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@handle_errors
def reconstruct_cmd(manifest_path, patches_dir, frequency, blend, out_dir):
    """Reassemble full images from patch files by overlap averaging."""
    doc = load_manifest(manifest_path)
    grid = manifest_grid(doc)
    patches_dir = patches_dir or str(Path(manifest_path).parent)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for entry in doc["entries"]:
        patches = read_entry_patches(doc, patches_dir, entry, frequency)
        recon = reconstruct(patches, grid, blend=blend)
        name = f"{entry['id']}_{frequency}.pgm"
        write_pgm(out / name, np.rint(np.clip(recon, 0, 255)).astype(np.uint8))
        written.append(name)
    click.echo(json.dumps({"out": str(out), "images": written}, sort_keys=True))


@main.command()
@click.option("--count", type=int, required=True, help="Number of items.")
@click.option("--folds", "k", type=int, required=True, help="Number of folds.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def split(count, k, seed, out_path):
    """Assign items to cross-validation folds (fold 0 takes the remainder)."""
    folds = split_folds(count, k, seed)
    doc = {
        "format": "folds/1",
        "count": count,
        "k": k,
        "seed": seed,
        "counts": list(folds.counts),
        "fold_of": folds.fold_of.tolist(),
    }
    if out_path:
        _write_json(Path(out_path), doc)
    click.echo(json.dumps(
        {"counts": doc["counts"], "k": k, "seed": seed}, sort_keys=True
    ))


def _discover_pairs(pairs_dir: Path):
    subdirs = sorted(
        d for d in pairs_dir.iterdir()
        if d.is_dir() and (d / "low.pgm").exists() and (d / "high.pgm").exists()
    )
    if subdirs:
        return [(d.name, d / "low", d / "high") for d in subdirs]
    lows = sorted(pairs_dir.glob("*_low.pgm"))
    items = []
    for low in lows:
        stem = low.name[: -len("_low.pgm")]
        high = pairs_dir / f"{stem}_high.pgm"
        if high.exists():
            items.append((stem, low.with_suffix(""), high.with_suffix("")))
    return items


@main.command()
@click.option("--pairs-dir", type=click.Path(), required=True,
              help="Directory of simulate runs or {id}_low/high.pgm pairs.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--folds", "k", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def export(pairs_dir, out_dir, k, seed):
    """Patch every pair and write a training manifest with fold labels."""
    from .imaging import ImagePair

    items = []
    for source_id, low_base, high_base in _discover_pairs(Path(pairs_dir)):
        items.append((
            source_id,
            ImagePair(low=load_bmode(low_base), high=load_bmode(high_base)),
        ))
    if not items:
        raise DataError(f"no image pairs found under {pairs_dir}")
    folds = split_folds(len(items), k, seed)
    manifest = export_for_training(items, folds, out_dir)
    click.echo(json.dumps({
        "manifest": str(manifest),
        "pairs": len(items),
        "fold_counts": list(folds.counts),
    }, sort_keys=True))


@main.command()
@click.option("--test", "test_dir", type=click.Path(), required=True,
              help="Directory of images under test (e.g. model outputs).")
@click.option("--reference", "ref_dir", type=click.Path(), required=True,
              help="Directory of reference images with matching filenames.")
@click.option("--ssim-window", default="7", show_default=True,
              help="Odd window size, or 'global'.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def score(test_dir, ref_dir, ssim_window, out_path):
    """Score test images against references (SSIM, PSNR, RMSE, MSE)."""
    from .imaging import read_pgm
    from .metrics import mse as mse_fn

    if ssim_window == "global":
        params = GLOBAL_SSIM
    else:
        try:
            params = SSIMParams(window=int(ssim_window))
        except ValueError as e:
            raise ConfigError(
                f"--ssim-window must be an odd integer or 'global', "
                f"got {ssim_window!r}"
            ) from e
    test_files = {p.name: p for p in sorted(Path(test_dir).glob("*.pgm"))}
    ref_files = {p.name: p for p in sorted(Path(ref_dir).glob("*.pgm"))}
    if not test_files:
        raise DataError(f"no .pgm files in {test_dir}")
    unmatched = sorted(set(test_files) ^ set(ref_files))
    if unmatched:
        raise DataError(
            f"unmatched image names between directories: {unmatched[:10]}"
            + (" ..." if len(unmatched) > 10 else "")
        )
    entries = []
    for name in sorted(test_files):
        x = read_pgm(test_files[name]).astype(float)
        y = read_pgm(ref_files[name]).astype(float)
        entries.append({
            "pair": name,
            "ssim": ssim(x, y, params),
            "psnr_db": psnr_db(x, y),
            "rmse": rmse(x, y),
            "mse": mse_fn(x, y),
        })
    report = MetricsReport(entries=entries).to_doc()
    if out_path:
        _write_json(Path(out_path), report)
    click.echo(json.dumps(report, indent=1, sort_keys=True))


main.add_command(reconstruct_cmd, name="reconstruct")


if __name__ == "__main__":
    main()
