"""System evaluation: resolution, eSNR, CNR, SSNR from a simulated pair.

Resolution and eSNR are measured on raw RF envelopes (pre-compression); CNR
and SSNR on the B-mode pixel grid. Which numbers appear in the report depends
on which region kinds the regions file provides.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .config import RunConfig, config_from_doc
from .errors import DataError
from .imaging import envelope_frame, load_bmode
from .metrics import cnr, esnr_db, fwhm, region_stats, ssnr
from .phantom import RegionSpec, load_regions, region_pixels
from .scanner import RFFrame, read_rf_frame, sample_to_depth

REPORT_FORMAT = "evaluation-report/1"
RUN_META_FORMAT = "run-meta/1"


def measure_wire(
    env: np.ndarray, region: RegionSpec, cfg: RunConfig
) -> dict:
    """Axial and lateral FWHM of the brightest echo inside an RF-frame box.

    The axial profile is the envelope along the peak line; the lateral
    profile takes each line's maximum over the box rows. Lateral spacing
    converts the scanline pitch to arc length at the target radius.
    """
    if region.frame != "rf":
        raise DataError("wire measurement expects an RF-frame region")
    g = cfg.geometry
    box = region_pixels(env, region)
    rel_line, rel_sample = np.unravel_index(int(np.argmax(box)), box.shape)
    line = region.col0 + int(rel_line)
    sample = region.row0 + int(rel_sample)
    axial_profile = env[line, region.row0 : region.row1]
    axial_spacing = cfg.medium.sound_speed_mps / (2.0 * g.rf_sample_rate_hz)
    lateral_profile = env[region.col0 : region.col1, region.row0 : region.row1].max(
        axis=1
    )
    radius = g.window_start_m + sample_to_depth(g, sample, cfg.medium)
    lateral_spacing = math.radians(g.angle_step_deg) * radius
    return {
        "peak_line": line,
        "peak_sample": sample,
        "radius_m": radius,
        "axial_fwhm_um": fwhm(axial_profile, axial_spacing) * 1e6,
        "lateral_fwhm_um": fwhm(lateral_profile, lateral_spacing) * 1e6,
    }


def _by_kind(regions, kind):
    return [r for r in regions if r.kind == kind]


def evaluate_frame(
    rf: RFFrame,
    image_pixels: np.ndarray,
    regions,
    cfg: RunConfig,
) -> dict:
    """Per-frequency evaluation record; omits metrics lacking regions."""
    env = envelope_frame(rf)
    out = {}
    targets = _by_kind(regions, "target")
    if targets:
        labeled = [
            (r.label or f"target-{i}", r) for i, r in enumerate(targets, start=1)
        ]
        wires = {label: measure_wire(env, r, cfg) for label, r in labeled}
        out["targets"] = wires
        # Headline resolution: middle target by sorted label.
        labels = sorted(wires)
        mid = wires[labels[len(labels) // 2]]
        out["axial_fwhm_um"] = mid["axial_fwhm_um"]
        out["lateral_fwhm_um"] = mid["lateral_fwhm_um"]
        noise = _by_kind(regions, "noise")
        if noise:
            noise_stats = region_stats(region_pixels(rf.data, noise[0]))
            out["esnr_db"] = {
                label: esnr_db(
                    region_stats(region_pixels(rf.data, r)), noise_stats
                )
                for label, r in labeled
            }
    homogeneous = _by_kind(regions, "homogeneous")
    background = _by_kind(regions, "background")
    if homogeneous and background:
        out["cnr"] = cnr(
            region_stats(region_pixels(image_pixels, homogeneous[0])),
            region_stats(region_pixels(image_pixels, background[0])),
        )
    speckle = _by_kind(regions, "speckle")
    if speckle:
        out["ssnr"] = ssnr(region_stats(region_pixels(image_pixels, speckle[0])))
    if not out:
        raise DataError(
            "no measurable regions: need kinds among "
            "target(+noise), homogeneous+background, speckle"
        )
    return out


def load_run_meta(run_dir) -> RunConfig:
    meta_path = Path(run_dir) / "meta.json"
    try:
        doc = json.loads(meta_path.read_text())
    except FileNotFoundError as e:
        raise DataError(f"run metadata not found: {meta_path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{meta_path} is not valid JSON: {e}") from e
    if doc.get("format") != RUN_META_FORMAT:
        raise DataError(f"{meta_path}: unsupported run metadata format")
    return config_from_doc(doc["config"])


def evaluate_run(run_dir, regions_path=None) -> dict:
    """Evaluate a simulate output directory into a report document."""
    run = Path(run_dir)
    cfg = load_run_meta(run)
    regions = load_regions(
        regions_path if regions_path is not None else run / "regions.json"
    )
    if not regions:
        raise DataError(
            "regions file lists no regions; required kinds: target(+noise) "
            "for resolution/eSNR, homogeneous+background for CNR, "
            "speckle for SSNR"
        )
    report = {"format": REPORT_FORMAT, "seed": cfg.seed}
    for freq in ("low", "high"):
        rf = read_rf_frame(run / f"{freq}.rff")
        rf.geometry = cfg.geometry
        image = load_bmode(run / freq)
        report[freq] = evaluate_frame(rf, image.pixels.astype(float), regions, cfg)
    return report
