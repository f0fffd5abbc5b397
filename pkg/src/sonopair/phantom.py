"""Phantom definitions: scatterer fields, targets, regions of interest.

Plane coordinates are Cartesian (x, z) meters with the probe's rotation
center at the origin. A point's beam angle is measured in degrees with
angle 0 along +z, increasing toward +x: position = r * (sin a, cos a).
The stock imaging sector is centered at 180 degrees (opposite the thick
structural pillar).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .acoustics import (
    HIGH_FREQUENCY_PRESET,
    TISSUE,
    WATER,
    Medium,
    TransducerSpec,
    axial_fwhm_m,
    lateral_beam_fwhm,
)
from .errors import ConfigError, DataError

PHANTOM_FORMAT = "phantom/1"
REGIONS_FORMAT = "regions/1"

# Diffuse reflectivities are N(0, 1); a wire sits 40 dB above the mean
# absolute diffuse reflectivity sqrt(2/pi).
DIFFUSE_REFLECTIVITY_STD = 1.0
WIRE_GAIN_DB = 40.0
WIRE_REFLECTIVITY = 10.0 ** (WIRE_GAIN_DB / 20.0) * math.sqrt(2.0 / math.pi)

WIRE_DIAMETER_M = 100e-6
PILLAR_DIAMETER_M = 4e-3

DEFAULT_ROI_CENTER_DEG = 180.0
DEFAULT_ROI_SPAN_DEG = 106.0
DEFAULT_SECTOR_MARGIN_DEG = 18.0

# Default wire depths below the acquisition window start.
DEFAULT_WIRE_DEPTHS_M = (0.005, 0.010, 0.015)


def polar_position(angle_deg: float, radius_m: float) -> tuple[float, float]:
    """(x, z) of a point at the given beam angle and radius."""
    a = math.radians(angle_deg)
    return (radius_m * math.sin(a), radius_m * math.cos(a))


def position_angle_deg(x: float, z: float) -> float:
    """Beam angle of a plane point, wrapped to [0, 360)."""
    return math.degrees(math.atan2(x, z)) % 360.0


def position_radius_m(x: float, z: float) -> float:
    return math.hypot(x, z)


@dataclass(frozen=True)
class Bounds:
    """Polar box bounding the phantom: radial interval x angular interval."""

    radial_min_m: float = 0.002
    radial_max_m: float = 0.022
    angle_start_deg: float = 0.0
    angle_span_deg: float = 360.0

    def __post_init__(self):
        if not 0.0 <= self.radial_min_m < self.radial_max_m:
            raise ConfigError("bounds require 0 <= radial_min < radial_max")
        if not 0.0 < self.angle_span_deg <= 360.0:
            raise ConfigError("bounds angle_span_deg must lie in (0, 360]")

    def contains(self, x: float, z: float) -> bool:
        r = position_radius_m(x, z)
        if not self.radial_min_m <= r <= self.radial_max_m:
            return False
        if self.angle_span_deg >= 360.0:
            return True
        rel = (position_angle_deg(x, z) - self.angle_start_deg) % 360.0
        return rel <= self.angle_span_deg


DEFAULT_BOUNDS = Bounds()


@dataclass(frozen=True)
class WireTarget:
    """Thin wire seen in cross-section; simulated as one point scatterer."""

    x_m: float
    z_m: float
    diameter_m: float = WIRE_DIAMETER_M
    reflectivity: float = WIRE_REFLECTIVITY


@dataclass(frozen=True)
class PillarTarget:
    """Cylindrical pillar; only its front face (arc toward the probe) echoes."""

    x_m: float
    z_m: float
    diameter_m: float = PILLAR_DIAMETER_M
    reflectivity: float = WIRE_REFLECTIVITY


@dataclass(frozen=True)
class Disc:
    """Circular anechoic inclusion: no scatterers inside."""

    x_m: float
    z_m: float
    radius_m: float


@dataclass(frozen=True)
class PhantomDef:
    """Complete scene description for the simulator."""

    medium: Medium = TISSUE
    bounds: Bounds = DEFAULT_BOUNDS
    seed: int | None = None
    scatterer_positions: np.ndarray = field(
        default_factory=lambda: np.empty((0, 2)), repr=False
    )
    scatterer_reflectivities: np.ndarray = field(
        default_factory=lambda: np.empty(0), repr=False
    )
    wires: tuple[WireTarget, ...] = ()
    pillars: tuple[PillarTarget, ...] = ()
    anechoic_regions: tuple[Disc, ...] = ()

    def __post_init__(self):
        pos = np.asarray(self.scatterer_positions, dtype=float)
        refl = np.asarray(self.scatterer_reflectivities, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ConfigError("scatterer_positions must have shape (N, 2)")
        if refl.shape != (pos.shape[0],):
            raise ConfigError(
                "scatterer_reflectivities length must match scatterer_positions"
            )
        if pos.size and not np.all(np.isfinite(pos)):
            raise ConfigError("scatterer positions must be finite")
        if refl.size and not np.all(np.isfinite(refl)):
            raise ConfigError("scatterer reflectivities must be finite")
        object.__setattr__(self, "scatterer_positions", pos)
        object.__setattr__(self, "scatterer_reflectivities", refl)
        for t in list(self.wires) + list(self.pillars):
            if not self.bounds.contains(t.x_m, t.z_m):
                raise ConfigError(
                    f"target at ({t.x_m:.4f}, {t.z_m:.4f}) lies outside bounds"
                )

    @property
    def scatterer_count(self) -> int:
        return int(self.scatterer_positions.shape[0])


def _arc_points(pillar: PillarTarget, spacing_m: float):
    """Sample the pillar front face as an arc of point scatterers.

    The arc spans +-80 degrees around the point closest to the probe; each
    point's reflectivity carries a cosine obliquity taper.
    """
    radius = pillar.diameter_m / 2.0
    cx, cz = pillar.x_m, pillar.z_m
    norm = math.hypot(cx, cz)
    if norm == 0:
        raise ConfigError("pillar center cannot be at the probe origin")
    # Unit vector from the pillar center toward the probe.
    ux, uz = -cx / norm, -cz / norm
    half = math.radians(80.0)
    n = max(3, int(math.ceil(2.0 * half * radius / spacing_m)) + 1)
    psi = np.linspace(-half, half, n)
    cos_p, sin_p = np.cos(psi), np.sin(psi)
    px = cx + radius * (cos_p * ux - sin_p * uz)
    pz = cz + radius * (sin_p * ux + cos_p * uz)
    refl = pillar.reflectivity * np.cos(psi) / n
    return np.column_stack([px, pz]), refl


def point_scatterers(
    phantom: PhantomDef, arc_point_spacing_m: float = 2e-5
) -> tuple[np.ndarray, np.ndarray]:
    """Realize the full scene as point scatterers (positions, reflectivities).

    Diffuse scatterers, wires (one point each), and pillar front-face arcs are
    concatenated in that order; the arc reflectivities are normalized so a
    pillar's total reflectivity does not depend on the sampling spacing.
    """
    positions = [phantom.scatterer_positions.reshape(-1, 2)]
    refl = [phantom.scatterer_reflectivities]
    for w in phantom.wires:
        positions.append(np.array([[w.x_m, w.z_m]]))
        refl.append(np.array([w.reflectivity]))
    for p in phantom.pillars:
        pos_p, refl_p = _arc_points(p, arc_point_spacing_m)
        positions.append(pos_p)
        refl.append(refl_p)
    return np.concatenate(positions, axis=0), np.concatenate(refl)


def make_wire_phantom(
    wire_depths_m=None,
    *,
    window_start_m: float = 0.002,
    angle_deg: float = DEFAULT_ROI_CENTER_DEG,
    medium: Medium = WATER,
    bounds: Bounds = DEFAULT_BOUNDS,
    reflectivity: float = WIRE_REFLECTIVITY,
) -> PhantomDef:
    """Wire resolution phantom: point wires on the mid-sector ray, in water.

    Depths are measured below the acquisition window start, so the default
    (5, 10, 15) mm triplet sits at radii (7, 12, 17) mm with stock geometry.
    Pass depths centered on a transducer's focal depth to reproduce a layout
    with the middle wire on the focal plane.
    """
    if wire_depths_m is None:
        wire_depths_m = DEFAULT_WIRE_DEPTHS_M
    depths = [float(d) for d in wire_depths_m]
    if not depths:
        raise ConfigError("wire_depths_m must be non-empty")
    wires = []
    for d in depths:
        x, z = polar_position(angle_deg, window_start_m + d)
        wires.append(WireTarget(x_m=x, z_m=z, reflectivity=reflectivity))
    return PhantomDef(medium=medium, bounds=bounds, wires=tuple(wires))


def resolution_cell_area_m2(
    spec: TransducerSpec = HIGH_FREQUENCY_PRESET, medium: Medium = TISSUE
) -> float:
    """Nominal resolution cell: focal beam width x axial FWHM."""
    return lateral_beam_fwhm(spec, spec.focal_depth_m, medium) * axial_fwhm_m(
        spec, medium
    )


def make_tissue_phantom(
    scatterers_per_res_cell: float,
    seed: int,
    *,
    medium: Medium = TISSUE,
    bounds: Bounds = DEFAULT_BOUNDS,
    sector_center_deg: float = DEFAULT_ROI_CENTER_DEG,
    sector_span_deg: float = DEFAULT_ROI_SPAN_DEG + 2 * DEFAULT_SECTOR_MARGIN_DEG,
    cell_spec: TransducerSpec = HIGH_FREQUENCY_PRESET,
    reflectivity_std: float = DIFFUSE_REFLECTIVITY_STD,
    anechoic=(),
    wires=(),
    pillars=(),
) -> PhantomDef:
    """Speckle-generating phantom with optional embedded targets.

    Scatterer count is scatterers_per_res_cell per nominal resolution cell of
    cell_spec (the high-frequency preset by default), spread uniformly over
    the angular sector within the radial bounds. The sector default covers
    the stock imaging span plus a margin so edge scanlines see full speckle.
    Positions and reflectivities are reproducible from the seed; scatterers
    inside anechoic discs are removed.
    """
    if scatterers_per_res_cell <= 0:
        raise ConfigError("scatterers_per_res_cell must be positive")
    if not 0.0 < sector_span_deg <= 360.0:
        raise ConfigError("sector_span_deg must lie in (0, 360]")
    r0, r1 = bounds.radial_min_m, bounds.radial_max_m
    span_rad = math.radians(sector_span_deg)
    area = 0.5 * span_rad * (r1 * r1 - r0 * r0)
    cell = resolution_cell_area_m2(cell_spec, medium)
    count = int(round(scatterers_per_res_cell * area / cell))
    rng = np.random.default_rng(seed)
    # Uniform over the sector: angle uniform, radius via sqrt of uniform CDF.
    angles = sector_center_deg + sector_span_deg * (rng.random(count) - 0.5)
    radii = np.sqrt(rng.uniform(r0 * r0, r1 * r1, count))
    a = np.radians(angles)
    pos = np.column_stack([radii * np.sin(a), radii * np.cos(a)])
    refl = rng.normal(0.0, reflectivity_std, count)
    keep = np.ones(count, dtype=bool)
    for disc in anechoic:
        d2 = (pos[:, 0] - disc.x_m) ** 2 + (pos[:, 1] - disc.z_m) ** 2
        keep &= d2 > disc.radius_m**2
    return PhantomDef(
        medium=medium,
        bounds=bounds,
        seed=seed,
        scatterer_positions=pos[keep],
        scatterer_reflectivities=refl[keep],
        wires=tuple(wires),
        pillars=tuple(pillars),
        anechoic_regions=tuple(anechoic),
    )


# Contrast-evaluation scene: a 4 mm anechoic inclusion mid-window for CNR and
# a strong specular pillar deep in the window. The pillar echo tops the
# low-frequency frame (raising its normalization ceiling) but attenuates out
# of contention at 18.3 MHz; its gain is the point-equivalent reflectivity,
# of which the curved front face returns only a small stationary-phase band.
CONTRAST_DISC_ANGLE_DEG = 170.0
CONTRAST_DISC_RADIUS_M = 0.009
CONTRAST_DISC_HALF_M = 0.002
CONTRAST_PILLAR_ANGLE_DEG = 192.0
CONTRAST_PILLAR_RADIUS_M = 0.0205
CONTRAST_PILLAR_GAIN_DB = 71.0


def make_contrast_phantom(
    scatterers_per_res_cell: float = 10.0,
    seed: int = 0,
    *,
    medium: Medium = TISSUE,
    bounds: Bounds = DEFAULT_BOUNDS,
) -> PhantomDef:
    """Tissue phantom with an anechoic disc and a deep bright pillar target."""
    dx, dz = polar_position(CONTRAST_DISC_ANGLE_DEG, CONTRAST_DISC_RADIUS_M)
    px, pz = polar_position(CONTRAST_PILLAR_ANGLE_DEG, CONTRAST_PILLAR_RADIUS_M)
    pillar_reflectivity = (
        10.0 ** (CONTRAST_PILLAR_GAIN_DB / 20.0) * DIFFUSE_REFLECTIVITY_STD
    )
    return make_tissue_phantom(
        scatterers_per_res_cell,
        seed,
        medium=medium,
        bounds=bounds,
        anechoic=(Disc(dx, dz, CONTRAST_DISC_HALF_M),),
        pillars=(
            PillarTarget(px, pz, reflectivity=pillar_reflectivity),
        ),
    )


REGION_KINDS = ("target", "background", "homogeneous", "speckle", "noise")


@dataclass(frozen=True)
class RegionSpec:
    """Axis-aligned half-open box [col0, col1) x [row0, row1).

    Columns index scanlines in both frames; rows index image rows for
    frame="image" and RF samples for frame="rf".
    """

    kind: str
    col0: int
    col1: int
    row0: int
    row1: int
    frame: str = "image"
    label: str = ""

    def __post_init__(self):
        if self.kind not in REGION_KINDS:
            raise ConfigError(f"unknown region kind {self.kind!r}")
        if self.frame not in ("image", "rf"):
            raise ConfigError(f"unknown region frame {self.frame!r}")
        if self.col0 >= self.col1 or self.row0 >= self.row1:
            raise ConfigError("region box must have positive extent")
        if min(self.col0, self.row0) < 0:
            raise ConfigError("region box indices must be non-negative")


def region_pixels(array: np.ndarray, region: RegionSpec) -> np.ndarray:
    """Samples of a 2D array inside a region box, clipped to the array.

    For image arrays (rows x scanlines) the box rows select axis 0; for RF
    arrays (scanlines x samples) the scanline columns select axis 0. Raises
    DataError when the clipped box is empty.
    """
    if array.ndim != 2:
        raise DataError("region extraction expects a 2D array")
    if region.frame == "image":
        out = array[
            region.row0 : min(region.row1, array.shape[0]),
            region.col0 : min(region.col1, array.shape[1]),
        ]
    else:
        out = array[
            region.col0 : min(region.col1, array.shape[0]),
            region.row0 : min(region.row1, array.shape[1]),
        ]
    if out.size == 0:
        raise DataError(
            f"region {region.kind!r} [{region.col0}:{region.col1}, "
            f"{region.row0}:{region.row1}] does not intersect the array"
        )
    return out


def _medium_to_dict(m: Medium) -> dict:
    return {
        "sound_speed_mps": m.sound_speed_mps,
        "attenuation_db_cm_mhz": m.attenuation_db_cm_mhz,
    }


def save_phantom(phantom: PhantomDef, path) -> None:
    """Write a phantom as a versioned JSON document (lossless round-trip)."""
    doc = {
        "format": PHANTOM_FORMAT,
        "medium": _medium_to_dict(phantom.medium),
        "bounds": {
            "radial_min_m": phantom.bounds.radial_min_m,
            "radial_max_m": phantom.bounds.radial_max_m,
            "angle_start_deg": phantom.bounds.angle_start_deg,
            "angle_span_deg": phantom.bounds.angle_span_deg,
        },
        "seed": phantom.seed,
        "scatterers": {
            "positions": phantom.scatterer_positions.tolist(),
            "reflectivities": phantom.scatterer_reflectivities.tolist(),
        },
        "wires": [
            {
                "x_m": w.x_m,
                "z_m": w.z_m,
                "diameter_m": w.diameter_m,
                "reflectivity": w.reflectivity,
            }
            for w in phantom.wires
        ],
        "pillars": [
            {
                "x_m": p.x_m,
                "z_m": p.z_m,
                "diameter_m": p.diameter_m,
                "reflectivity": p.reflectivity,
            }
            for p in phantom.pillars
        ],
        "anechoic_regions": [
            {"x_m": d.x_m, "z_m": d.z_m, "radius_m": d.radius_m}
            for d in phantom.anechoic_regions
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_phantom(path) -> PhantomDef:
    """Read a phantom document written by save_phantom."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"phantom file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"phantom file {path} is not valid JSON: {e}") from e
    if doc.get("format") != PHANTOM_FORMAT:
        raise DataError(
            f"unsupported phantom format {doc.get('format')!r}; "
            f"expected {PHANTOM_FORMAT!r}"
        )
    try:
        return PhantomDef(
            medium=Medium(**doc["medium"]),
            bounds=Bounds(**doc["bounds"]),
            seed=doc.get("seed"),
            scatterer_positions=np.asarray(
                doc["scatterers"]["positions"], dtype=float
            ).reshape(-1, 2),
            scatterer_reflectivities=np.asarray(
                doc["scatterers"]["reflectivities"], dtype=float
            ),
            wires=tuple(WireTarget(**w) for w in doc["wires"]),
            pillars=tuple(PillarTarget(**p) for p in doc["pillars"]),
            anechoic_regions=tuple(Disc(**d) for d in doc["anechoic_regions"]),
        )
    except (KeyError, TypeError) as e:
        raise DataError(f"phantom file {path} is missing fields: {e}") from e


def save_regions(regions, path) -> None:
    doc = {
        "format": REGIONS_FORMAT,
        "regions": [
            {
                "kind": r.kind,
                "frame": r.frame,
                "col0": r.col0,
                "col1": r.col1,
                "row0": r.row0,
                "row1": r.row1,
                "label": r.label,
            }
            for r in regions
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_regions(path) -> tuple[RegionSpec, ...]:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"regions file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"regions file {path} is not valid JSON: {e}") from e
    if doc.get("format") != REGIONS_FORMAT:
        raise DataError(
            f"unsupported regions format {doc.get('format')!r}; "
            f"expected {REGIONS_FORMAT!r}"
        )
    try:
        return tuple(RegionSpec(**r) for r in doc["regions"])
    except (KeyError, TypeError) as e:
        raise DataError(f"regions file {path} is malformed: {e}") from e
    except ConfigError as e:
        raise DataError(f"regions file {path} is malformed: {e}") from e
