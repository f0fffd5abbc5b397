"""Rotational dual-element scan geometry and RF line synthesis.

A frame is a set of evenly spaced scanlines radiating from the rotation
center across the imaging sector. Both elements share one angle grid: the
mechanical 180-degree separation between the top and bottom elements is
absorbed into frame alignment, so line k of the low- and high-frequency
frames interrogates the same ray.

RF sample i of a line corresponds to round-trip time i / sample_rate measured
from the acquisition window start (window_start_m from the rotation center).
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .acoustics import (
    Medium,
    Mount,
    PulseWaveform,
    TransducerSpec,
    lateral_beam_fwhm,
    make_pulse,
)
from .errors import ConfigError, DataError
from .phantom import PhantomDef, point_scatterers

# Reference sound speed used to size the RF sample grid.
REFERENCE_SOUND_SPEED_MPS = 1540.0

# Scatterers beyond this many lateral beam FWHM of a ray are skipped.
LATERAL_CULL_FWHM = 3.0

RF_MAGIC = b"SPRF"
RF_VERSION = 1


@dataclass(frozen=True)
class ProbeGeometry:
    """Rotational probe acquisition geometry.

    pillar_angles_deg lists the structural pillars of the capsule (first
    entry is the thick pillar); the imaging sector is centered opposite the
    thick pillar. rf_samples_per_line derives from depth and sample rate at
    the reference sound speed when not given explicitly.
    """

    reflector_angle_deg: float = 45.0
    roi_span_deg: float = 106.0
    scanlines_per_frame: int = 436
    rf_sample_rate_hz: float = 100e6
    depth_m: float = 0.02
    window_start_m: float = 0.002
    rotation_speed_rpm: float = 1293.1
    phase_offset_deg: float = 180.0
    pillar_angles_deg: tuple[float, ...] = (0.0, 90.0, 270.0)
    pillar_radius_m: float = 0.007
    rf_samples_per_line: int | None = None

    def __post_init__(self):
        if not 0.0 < self.reflector_angle_deg < 90.0:
            raise ConfigError("reflector_angle_deg must lie in (0, 90)")
        if not 0.0 < self.roi_span_deg <= 360.0:
            raise ConfigError("roi_span_deg must lie in (0, 360]")
        if self.scanlines_per_frame < 2:
            raise ConfigError("scanlines_per_frame must be at least 2")
        if self.rf_sample_rate_hz <= 0:
            raise ConfigError("rf_sample_rate_hz must be positive")
        if self.depth_m <= 0:
            raise ConfigError("depth_m must be positive")
        if self.window_start_m < 0:
            raise ConfigError("window_start_m must be non-negative")
        if self.rotation_speed_rpm <= 0:
            raise ConfigError("rotation_speed_rpm must be positive")
        if not self.pillar_angles_deg:
            raise ConfigError("pillar_angles_deg must name the thick pillar")
        if self.rf_samples_per_line is None:
            n = math.ceil(
                2.0
                * self.depth_m
                / REFERENCE_SOUND_SPEED_MPS
                * self.rf_sample_rate_hz
            )
            object.__setattr__(self, "rf_samples_per_line", n)
        if self.rf_samples_per_line < 2:
            raise ConfigError("rf_samples_per_line must be at least 2")

    @property
    def frame_rate_hz(self) -> float:
        """One frame per rotation."""
        return self.rotation_speed_rpm / 60.0

    @property
    def roi_center_deg(self) -> float:
        return (self.pillar_angles_deg[0] + 180.0) % 360.0

    @property
    def roi_start_deg(self) -> float:
        return self.roi_center_deg - self.roi_span_deg / 2.0

    @property
    def angle_step_deg(self) -> float:
        return self.roi_span_deg / (self.scanlines_per_frame - 1)


@dataclass(frozen=True)
class ScanlineRay:
    """One beam axis: index within the frame and absolute angle."""

    index: int
    angle_deg: float
    origin_m: tuple[float, float] = (0.0, 0.0)


def scanline_angles(geometry: ProbeGeometry) -> np.ndarray:
    """Evenly spaced scanline angles; first and last differ by the ROI span."""
    return np.linspace(
        geometry.roi_start_deg,
        geometry.roi_start_deg + geometry.roi_span_deg,
        geometry.scanlines_per_frame,
    )


def make_ray(geometry: ProbeGeometry, index: int) -> ScanlineRay:
    if not 0 <= index < geometry.scanlines_per_frame:
        raise ConfigError(f"scanline index {index} out of range")
    return ScanlineRay(index=index, angle_deg=float(scanline_angles(geometry)[index]))


def depth_to_sample(
    geometry: ProbeGeometry, depth_below_window_m: float, medium: Medium
) -> float:
    """Fractional RF sample index of an echo from the given window depth."""
    return (
        2.0
        * depth_below_window_m
        / medium.sound_speed_mps
        * geometry.rf_sample_rate_hz
    )


def sample_to_depth(geometry: ProbeGeometry, sample: float, medium: Medium) -> float:
    return sample * medium.sound_speed_mps / (2.0 * geometry.rf_sample_rate_hz)


def line_rng(seed: int, transducer_id: str, line_index: int) -> np.random.Generator:
    """Deterministic per-line noise substream, independent of scan order."""
    tag = int.from_bytes(
        hashlib.sha256(transducer_id.encode("utf-8")).digest()[:8], "little"
    )
    return np.random.default_rng([seed, tag, line_index])


class _Scene:
    """Per-(phantom, transducer) precomputation for line synthesis."""

    def __init__(self, phantom: PhantomDef, spec: TransducerSpec, medium: Medium):
        pos, refl = point_scatterers(phantom)
        self.radius_m = np.hypot(pos[:, 0], pos[:, 1])
        self.angle_deg = np.degrees(np.arctan2(pos[:, 0], pos[:, 1])) % 360.0
        # Beam width per scatterer depth; w(z) = w_f sqrt(1 + (z/F - 1)^2).
        w_focus = lateral_beam_fwhm(spec, spec.focal_depth_m, medium)
        rel = self.radius_m / spec.focal_depth_m - 1.0
        self.beam_fwhm_m = w_focus * np.sqrt(1.0 + rel * rel)
        # Round-trip attenuation folded into the per-scatterer amplitude.
        db_per_m = medium.attenuation_db_cm_mhz * (
            spec.center_frequency_hz / 1e6
        ) * 2.0 * 100.0
        self.amplitude = refl * 10.0 ** (-db_per_m * self.radius_m / 20.0)


def _synthesize_line(
    scene: _Scene,
    pulse: PulseWaveform,
    angle_deg: float,
    geometry: ProbeGeometry,
    medium: Medium,
    noise_sigma: float,
    rng: np.random.Generator | None,
) -> np.ndarray:
    n = geometry.rf_samples_per_line
    line = np.zeros(n)
    if scene.radius_m.size:
        delta = (scene.angle_deg - angle_deg + 180.0) % 360.0 - 180.0
        lateral = scene.radius_m * np.sin(np.radians(delta))
        keep = (np.abs(delta) <= 90.0) & (
            np.abs(lateral) <= LATERAL_CULL_FWHM * scene.beam_fwhm_m
        )
        if np.any(keep):
            w = scene.beam_fwhm_m[keep]
            weight = np.exp(-4.0 * np.log(2.0) * (lateral[keep] / w) ** 2)
            amp = scene.amplitude[keep] * weight
            # Echo delay from the window start, split over two RF samples.
            s = (
                2.0
                * (scene.radius_m[keep] - geometry.window_start_m)
                / medium.sound_speed_mps
                * geometry.rf_sample_rate_hz
            )
            i0 = np.floor(s).astype(np.int64)
            frac = s - i0
            deposits = np.zeros(n)
            for idx, a in ((i0, amp * (1.0 - frac)), (i0 + 1, amp * frac)):
                ok = (idx >= 0) & (idx < n)
                if np.any(ok):
                    deposits += np.bincount(idx[ok], weights=a[ok], minlength=n)
            if np.any(deposits):
                full = fftconvolve(deposits, pulse.samples)
                line = full[pulse.t0_index : pulse.t0_index + n]
    if noise_sigma > 0.0:
        gen = rng if rng is not None else np.random.default_rng()
        line = line + gen.normal(0.0, noise_sigma, n)
    return line


def synthesize_rf_line(
    phantom: PhantomDef,
    spec: TransducerSpec,
    ray: ScanlineRay,
    geometry: ProbeGeometry,
    *,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Synthesize one RF line.

    Each scatterer within 3 lateral beam FWHM of the ray contributes
    reflectivity x lateral PSF weight x round-trip attenuation, as a pulse
    echo delayed by its round-trip time; white Gaussian noise of the given
    amplitude is added when noise_sigma > 0. Doubling all reflectivities
    doubles the noise-free line exactly.
    """
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be non-negative")
    medium = phantom.medium
    pulse = make_pulse(spec, geometry.rf_sample_rate_hz)
    scene = _Scene(phantom, spec, medium)
    return _synthesize_line(
        scene, pulse, ray.angle_deg, geometry, medium, noise_sigma, rng
    )


@dataclass
class RFFrame:
    """One transducer's RF data: (scanlines, samples) row-major."""

    transducer_id: str
    sample_rate_hz: float
    data: np.ndarray = field(repr=False)
    geometry: ProbeGeometry | None = None

    @property
    def n_lines(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AlignmentRecord:
    """How the two frames of a pair were co-registered."""

    phase_offset_deg: float
    max_angle_error_deg: float


@dataclass
class PairedRFFrame:
    low: RFFrame
    high: RFFrame
    alignment: AlignmentRecord


def simulate_frame(
    phantom: PhantomDef,
    geometry: ProbeGeometry,
    spec: TransducerSpec,
    *,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> RFFrame:
    """Synthesize a full frame, one deterministic noise substream per line."""
    medium = phantom.medium
    pulse = make_pulse(spec, geometry.rf_sample_rate_hz)
    scene = _Scene(phantom, spec, medium)
    angles = scanline_angles(geometry)
    data = np.empty((geometry.scanlines_per_frame, geometry.rf_samples_per_line))
    for k, angle in enumerate(angles):
        rng = line_rng(seed, spec.id, k) if noise_sigma > 0.0 else None
        data[k] = _synthesize_line(
            scene, pulse, float(angle), geometry, medium, noise_sigma, rng
        )
    return RFFrame(
        transducer_id=spec.id,
        sample_rate_hz=geometry.rf_sample_rate_hz,
        data=data,
        geometry=geometry,
    )


def simulate_pair(
    phantom: PhantomDef,
    geometry: ProbeGeometry,
    low_spec: TransducerSpec,
    high_spec: TransducerSpec,
    *,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> PairedRFFrame:
    """Simulate co-registered low/high frames over one shared angle grid.

    The low-frequency element must be the top mount and the high-frequency
    element the bottom mount; their mechanical phase offset is absorbed so
    both frames share scanline angles exactly.
    """
    if low_spec.mount is not Mount.TOP or high_spec.mount is not Mount.BOTTOM:
        raise ConfigError(
            "mount mismatch: pair simulation expects low=top, high=bottom"
        )
    if low_spec.center_frequency_hz >= high_spec.center_frequency_hz:
        raise ConfigError("low_spec must have the lower center frequency")
    low = simulate_frame(
        phantom, geometry, low_spec, noise_sigma=noise_sigma, seed=seed
    )
    high = simulate_frame(
        phantom, geometry, high_spec, noise_sigma=noise_sigma, seed=seed
    )
    return PairedRFFrame(
        low=low,
        high=high,
        alignment=AlignmentRecord(
            phase_offset_deg=geometry.phase_offset_deg, max_angle_error_deg=0.0
        ),
    )


def write_rf_frame(path, frame: RFFrame) -> None:
    """Write the binary RF format (documented in docs/formats.md)."""
    ident = frame.transducer_id.encode("utf-8")
    data = np.ascontiguousarray(frame.data, dtype="<f4")
    header = RF_MAGIC + struct.pack(
        "<III d I",
        RF_VERSION,
        frame.n_lines,
        frame.n_samples,
        frame.sample_rate_hz,
        len(ident),
    )
    Path(path).write_bytes(header + ident + data.tobytes())


def read_rf_frame(path) -> RFFrame:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"RF file not found: {path}") from e
    head = struct.calcsize("<III d I")
    if len(blob) < 4 + head or blob[:4] != RF_MAGIC:
        raise DataError(f"{path} is not an RF frame file")
    version, n_lines, n_samples, rate, id_len = struct.unpack(
        "<III d I", blob[4 : 4 + head]
    )
    if version != RF_VERSION:
        raise DataError(f"unsupported RF format version {version}")
    off = 4 + head
    ident = blob[off : off + id_len].decode("utf-8")
    payload = blob[off + id_len :]
    expected = n_lines * n_samples * 4
    if len(payload) != expected:
        raise DataError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n_lines, n_samples)
    return RFFrame(
        transducer_id=ident,
        sample_rate_hz=rate,
        data=data.astype(np.float64),
    )
