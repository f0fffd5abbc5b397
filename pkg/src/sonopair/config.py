"""Run configuration: YAML document, schema validation, phantom/region setup.

A config file is a YAML mapping; every key is optional and unknown keys are
rejected with the offending path in the message. CLI flags override file
values after loading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from . import phantom as ph
from .acoustics import (
    HIGH_FREQUENCY_PRESET,
    LOW_FREQUENCY_PRESET,
    MEDIUM_PRESETS,
    Medium,
    Mount,
    TransducerSpec,
    lateral_beam_fwhm,
)
from .errors import ConfigError, DataError
from .scanner import ProbeGeometry, depth_to_sample
from .phantom import (
    Bounds,
    PhantomDef,
    RegionSpec,
    load_phantom,
    make_contrast_phantom,
    make_tissue_phantom,
    make_wire_phantom,
)

PHANTOM_KINDS = ("wire", "tissue", "contrast", "file")

DEFAULT_NOISE_SIGMA = 0.02
DEFAULT_DENSITY_PER_CELL = 10.0


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    dynamic_range_db: float = 50.0
    low: TransducerSpec = LOW_FREQUENCY_PRESET
    high: TransducerSpec = HIGH_FREQUENCY_PRESET
    geometry: ProbeGeometry = ProbeGeometry()
    medium: Medium = MEDIUM_PRESETS["tissue"]
    phantom_kind: str = "contrast"
    phantom_file: str | None = None
    wire_depths_m: tuple[float, ...] | None = None
    density_per_cell: float = DEFAULT_DENSITY_PER_CELL

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if self.dynamic_range_db <= 0:
            raise ConfigError("dynamic_range_db must be positive")
        if self.phantom_kind not in PHANTOM_KINDS:
            raise ConfigError(
                f"phantom kind {self.phantom_kind!r} not in {PHANTOM_KINDS}"
            )
        if self.phantom_kind == "file" and not self.phantom_file:
            raise ConfigError("phantom kind 'file' requires phantom.file")
        if self.density_per_cell <= 0:
            raise ConfigError("density_per_cell must be positive")


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"config: {path} must be a mapping")
    return node


def _take(node: dict, path: str, allowed: dict) -> dict:
    out = {}
    for key, value in node.items():
        if key not in allowed:
            raise ConfigError(f"config: unknown key {path}{key!r}")
        kind = allowed[key]
        if kind is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"config: {path}{key} must be a number")
            value = float(value)
        elif kind is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"config: {path}{key} must be an integer")
        elif kind is str:
            if not isinstance(value, str):
                raise ConfigError(f"config: {path}{key} must be a string")
        elif kind is list:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"config: {path}{key} must be a list")
        out[key] = value
    return out


_TRANSDUCER_FIELDS = {
    "id": str,
    "center_frequency_hz": float,
    "fractional_bandwidth": float,
    "focal_depth_m": float,
    "aperture_diameter_m": float,
    "mount": str,
}

_GEOMETRY_FIELDS = {
    "reflector_angle_deg": float,
    "roi_span_deg": float,
    "scanlines_per_frame": int,
    "rf_sample_rate_hz": float,
    "depth_m": float,
    "window_start_m": float,
    "rotation_speed_rpm": float,
    "phase_offset_deg": float,
    "pillar_angles_deg": list,
    "pillar_radius_m": float,
    "rf_samples_per_line": int,
}

_MEDIUM_FIELDS = {"sound_speed_mps": float, "attenuation_db_cm_mhz": float}

_PHANTOM_FIELDS = {
    "kind": str,
    "file": str,
    "wire_depths_m": list,
    "density_per_cell": float,
}

_TOP_FIELDS = {
    "seed": int,
    "noise_sigma": float,
    "dynamic_range_db": float,
    "transducers": dict,
    "geometry": dict,
    "medium": object,
    "phantom": dict,
}


def _transducer(node, path, base: TransducerSpec) -> TransducerSpec:
    fields = _take(_require_mapping(node, path), path + ".", _TRANSDUCER_FIELDS)
    if "mount" in fields:
        try:
            fields["mount"] = Mount(fields["mount"])
        except ValueError as e:
            raise ConfigError(f"config: {path}.mount must be 'top' or 'bottom'") from e
    return replace(base, **fields)


def _medium(node) -> Medium:
    if isinstance(node, str):
        if node not in MEDIUM_PRESETS:
            raise ConfigError(
                f"config: medium preset {node!r} not in {sorted(MEDIUM_PRESETS)}"
            )
        return MEDIUM_PRESETS[node]
    fields = _take(_require_mapping(node, "medium"), "medium.", _MEDIUM_FIELDS)
    return Medium(**fields)


def parse_config(doc, source: str = "<config>") -> RunConfig:
    """Validate a parsed YAML document into a RunConfig."""
    if doc is None:
        doc = {}
    doc = _require_mapping(doc, "top level")
    top = _take(doc, "", _TOP_FIELDS)
    kwargs = {}
    for key in ("seed", "noise_sigma", "dynamic_range_db"):
        if key in top:
            kwargs[key] = top[key]
    if "transducers" in top:
        tnode = _require_mapping(top["transducers"], "transducers")
        extra = set(tnode) - {"low", "high"}
        if extra:
            raise ConfigError(
                f"config: unknown key transducers.{sorted(extra)[0]!r}"
            )
        if "low" in tnode:
            kwargs["low"] = _transducer(tnode["low"], "transducers.low",
                                        LOW_FREQUENCY_PRESET)
        if "high" in tnode:
            kwargs["high"] = _transducer(tnode["high"], "transducers.high",
                                         HIGH_FREQUENCY_PRESET)
    if "geometry" in top:
        fields = _take(
            _require_mapping(top["geometry"], "geometry"), "geometry.",
            _GEOMETRY_FIELDS,
        )
        if "pillar_angles_deg" in fields:
            fields["pillar_angles_deg"] = tuple(
                float(a) for a in fields["pillar_angles_deg"]
            )
        kwargs["geometry"] = ProbeGeometry(**fields)
    if "medium" in top:
        kwargs["medium"] = _medium(top["medium"])
    if "phantom" in top:
        fields = _take(
            _require_mapping(top["phantom"], "phantom"), "phantom.", _PHANTOM_FIELDS
        )
        if "kind" in fields:
            kwargs["phantom_kind"] = fields["kind"]
        if "file" in fields:
            kwargs["phantom_file"] = fields["file"]
        if "wire_depths_m" in fields:
            kwargs["wire_depths_m"] = tuple(float(d) for d in fields["wire_depths_m"])
        if "density_per_cell" in fields:
            kwargs["density_per_cell"] = fields["density_per_cell"]
    try:
        return RunConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(f"config {source}: {e}") from e


def load_config(path=None) -> RunConfig:
    """Load a YAML config file; None gives the stock configuration."""
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {path} is not valid YAML: {e}") from e
    return parse_config(doc, source=str(path))


def phantom_bounds(cfg: RunConfig) -> Bounds:
    g = cfg.geometry
    return Bounds(
        radial_min_m=g.window_start_m if g.window_start_m > 0 else 0.0,
        radial_max_m=g.window_start_m + g.depth_m,
    )


def build_phantom(cfg: RunConfig) -> PhantomDef:
    """Construct the configured phantom (reproducible from cfg.seed)."""
    g = cfg.geometry
    bounds = phantom_bounds(cfg)
    if cfg.phantom_kind == "file":
        return load_phantom(cfg.phantom_file)
    if cfg.phantom_kind == "wire":
        return make_wire_phantom(
            cfg.wire_depths_m,
            window_start_m=g.window_start_m,
            angle_deg=g.roi_center_deg,
            medium=cfg.medium,
            bounds=bounds,
        )
    if cfg.phantom_kind == "tissue":
        return make_tissue_phantom(
            cfg.density_per_cell,
            cfg.seed,
            medium=cfg.medium,
            bounds=bounds,
            sector_center_deg=g.roi_center_deg,
            sector_span_deg=g.roi_span_deg + 2 * ph.DEFAULT_SECTOR_MARGIN_DEG,
            cell_spec=cfg.high,
        )
    return make_contrast_phantom(
        cfg.density_per_cell, cfg.seed, medium=cfg.medium, bounds=bounds
    )


def config_to_doc(cfg: RunConfig) -> dict:
    """Full effective-config echo for run metadata (deterministic)."""

    def spec_doc(s: TransducerSpec) -> dict:
        return {
            "id": s.id,
            "center_frequency_hz": s.center_frequency_hz,
            "fractional_bandwidth": s.fractional_bandwidth,
            "focal_depth_m": s.focal_depth_m,
            "aperture_diameter_m": s.aperture_diameter_m,
            "mount": s.mount.value,
        }

    g = cfg.geometry
    return {
        "seed": cfg.seed,
        "noise_sigma": cfg.noise_sigma,
        "dynamic_range_db": cfg.dynamic_range_db,
        "transducers": {"low": spec_doc(cfg.low), "high": spec_doc(cfg.high)},
        "geometry": {
            "reflector_angle_deg": g.reflector_angle_deg,
            "roi_span_deg": g.roi_span_deg,
            "scanlines_per_frame": g.scanlines_per_frame,
            "rf_sample_rate_hz": g.rf_sample_rate_hz,
            "depth_m": g.depth_m,
            "window_start_m": g.window_start_m,
            "rotation_speed_rpm": g.rotation_speed_rpm,
            "phase_offset_deg": g.phase_offset_deg,
            "pillar_angles_deg": list(g.pillar_angles_deg),
            "pillar_radius_m": g.pillar_radius_m,
            "rf_samples_per_line": g.rf_samples_per_line,
        },
        "medium": {
            "sound_speed_mps": cfg.medium.sound_speed_mps,
            "attenuation_db_cm_mhz": cfg.medium.attenuation_db_cm_mhz,
        },
        "phantom": {
            "kind": cfg.phantom_kind,
            "file": cfg.phantom_file,
            "wire_depths_m": (
                list(cfg.wire_depths_m) if cfg.wire_depths_m is not None else None
            ),
            "density_per_cell": cfg.density_per_cell,
        },
    }


def config_from_doc(doc: dict) -> RunConfig:
    """Rebuild a RunConfig from a config_to_doc echo."""
    try:
        tr = doc["transducers"]
        geo = dict(doc["geometry"])
        geo["pillar_angles_deg"] = tuple(geo["pillar_angles_deg"])
        pha = doc["phantom"]
        low = dict(tr["low"])
        high = dict(tr["high"])
        low["mount"] = Mount(low["mount"])
        high["mount"] = Mount(high["mount"])
        return RunConfig(
            seed=doc["seed"],
            noise_sigma=doc["noise_sigma"],
            dynamic_range_db=doc["dynamic_range_db"],
            low=TransducerSpec(**low),
            high=TransducerSpec(**high),
            geometry=ProbeGeometry(**geo),
            medium=Medium(**doc["medium"]),
            phantom_kind=pha["kind"],
            phantom_file=pha["file"],
            wire_depths_m=(
                tuple(pha["wire_depths_m"])
                if pha["wire_depths_m"] is not None
                else None
            ),
            density_per_cell=pha["density_per_cell"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"run metadata is malformed: {e}") from e


def _image_col(cfg: RunConfig, angle_deg: float) -> int:
    g = cfg.geometry
    rel = (angle_deg - g.roi_start_deg) / g.roi_span_deg
    return int(round(rel * (g.scanlines_per_frame - 1)))


def _image_row(cfg: RunConfig, window_depth_m: float, rows: int = 1000) -> int:
    return int(round(window_depth_m / cfg.geometry.depth_m * (rows - 1)))


def _clamp_box(c0, c1, r0, r1, cols, rows):
    return (
        max(0, min(c0, cols - 1)),
        max(1, min(c1, cols)),
        max(0, min(r0, rows - 1)),
        max(1, min(r1, rows)),
    )


def auto_regions(cfg: RunConfig, phantom: PhantomDef) -> tuple[RegionSpec, ...]:
    """Measurement boxes matched to the built-in phantom layouts.

    Wire scenes get one RF-frame target box per wire plus an echo-free noise
    box at the sector edge; speckle scenes get homogeneous/background/speckle
    image-frame boxes. Region coordinates are toolkit conventions; supply a
    regions file to measure elsewhere.
    """
    g = cfg.geometry
    cols = g.scanlines_per_frame
    n_rf = g.rf_samples_per_line
    regions = []
    if phantom.wires:
        ordered = sorted(
            phantom.wires, key=lambda w: ph.position_radius_m(w.x_m, w.z_m)
        )
        for i, w in enumerate(ordered, start=1):
            angle = ph.position_angle_deg(w.x_m, w.z_m)
            radius = ph.position_radius_m(w.x_m, w.z_m)
            depth = radius - g.window_start_m
            col = _image_col(cfg, angle)
            # Wide enough for the broadest (low-frequency) lateral lobe to
            # fall below half maximum on both sides.
            w_low = lateral_beam_fwhm(cfg.low, radius, cfg.medium)
            half_deg = math.degrees(1.6 * w_low / radius)
            half_cols = max(2, int(round(half_deg / g.angle_step_deg)))
            s = depth_to_sample(g, depth, cfg.medium)
            half_rows = int(round(depth_to_sample(g, 0.002, cfg.medium)))
            box = _clamp_box(
                col - half_cols, col + half_cols + 1,
                int(round(s)) - half_rows, int(round(s)) + half_rows + 1,
                cols, n_rf,
            )
            regions.append(
                RegionSpec("target", *box, frame="rf", label=f"wire-{i}")
            )
        regions.append(
            RegionSpec(
                "noise", 0, max(2, cols // 16), 200, max(400, n_rf - 200),
                frame="rf", label="noise",
            )
        )
    if phantom.scatterer_count:
        rows = 1000
        # Homogeneous speckle to the right of the inclusion, same depth band.
        h_box = _clamp_box(
            _image_col(cfg, g.roi_center_deg + 15.0),
            _image_col(cfg, g.roi_center_deg + 39.0) + 1,
            _image_row(cfg, 0.0055, rows),
            _image_row(cfg, 0.0085, rows) + 1,
            cols, rows,
        )
        regions.append(RegionSpec("homogeneous", *h_box, label="speckle-target"))
        # Full sector width, shallow and thin: wide enough to hold many
        # speckle cells even for the broad low-frequency beam, thin enough
        # that the in-box attenuation ramp stays small next to the speckle
        # spread, and above the anechoic inclusion's radial band.
        s_box = _clamp_box(
            _image_col(cfg, g.roi_center_deg - 44.0),
            _image_col(cfg, g.roi_center_deg + 44.0) + 1,
            _image_row(cfg, 0.0025, rows),
            _image_row(cfg, 0.0047, rows) + 1,
            cols, rows,
        )
        regions.append(RegionSpec("speckle", *s_box, label="speckle-wide"))
        if phantom.anechoic_regions:
            d = phantom.anechoic_regions[0]
            angle = ph.position_angle_deg(d.x_m, d.z_m)
            radius = ph.position_radius_m(d.x_m, d.z_m)
            half_ang = math.degrees(0.5 * d.radius_m / radius)
            b_box = _clamp_box(
                _image_col(cfg, angle - half_ang),
                _image_col(cfg, angle + half_ang) + 1,
                _image_row(cfg, radius - g.window_start_m - 0.5 * d.radius_m, rows),
                _image_row(cfg, radius - g.window_start_m + 0.5 * d.radius_m, rows) + 1,
                cols, rows,
            )
            regions.append(RegionSpec("background", *b_box, label="anechoic"))
    return tuple(regions)
