"""Transducer pulse, beam-geometry, and propagation-loss models.

All depths are one-way path lengths in meters measured from the probe's
rotation center, frequencies in Hz, angles in degrees unless noted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UndersampledError

# FWHM of a Gaussian = GAUSSIAN_FWHM_FACTOR * sigma
GAUSSIAN_FWHM_FACTOR = 2.0 * np.sqrt(2.0 * np.log(2.0))

# Sampled excitation pulses are truncated at +-4 sigma of the envelope.
PULSE_TRUNCATION_SIGMAS = 4.0

# Minimum oversampling of the center frequency for a usable RF grid.
MIN_SAMPLES_PER_CYCLE = 4.0


class Mount(enum.Enum):
    """Element position in the dual-element capsule."""

    TOP = "top"
    BOTTOM = "bottom"


@dataclass(frozen=True)
class Medium:
    """Homogeneous propagation medium."""

    sound_speed_mps: float = 1540.0
    attenuation_db_cm_mhz: float = 0.5

    def __post_init__(self):
        if self.sound_speed_mps <= 0:
            raise ConfigError("sound_speed_mps must be positive")
        if self.attenuation_db_cm_mhz < 0:
            raise ConfigError("attenuation_db_cm_mhz must be non-negative")


TISSUE = Medium(sound_speed_mps=1540.0, attenuation_db_cm_mhz=0.5)
# Low-loss tissue-mimicking gel, the default test-object medium.
GEL = Medium(sound_speed_mps=1540.0, attenuation_db_cm_mhz=0.1)
# All presets keep the common sound speed; they differ in attenuation only.
WATER = Medium(sound_speed_mps=1540.0, attenuation_db_cm_mhz=0.0022)

MEDIUM_PRESETS = {"tissue": TISSUE, "gel": GEL, "water": WATER}


@dataclass(frozen=True)
class TransducerSpec:
    """Single-element transducer description.

    fractional_bandwidth is the -6 dB width of the amplitude spectrum divided
    by the center frequency. focal_depth_m and aperture_diameter_m are assumed
    hardware parameters; override them to match a specific probe.
    """

    id: str
    center_frequency_hz: float
    fractional_bandwidth: float
    focal_depth_m: float = 0.020
    aperture_diameter_m: float = 0.003
    mount: Mount = Mount.TOP

    def __post_init__(self):
        if not self.id:
            raise ConfigError("transducer id must be non-empty")
        if self.center_frequency_hz <= 0:
            raise ConfigError("center_frequency_hz must be positive")
        if not 0.0 < self.fractional_bandwidth < 2.0:
            raise ConfigError(
                "fractional_bandwidth must lie in (0, 2), got "
                f"{self.fractional_bandwidth}"
            )
        if self.focal_depth_m <= 0:
            raise ConfigError("focal_depth_m must be positive")
        if self.aperture_diameter_m <= 0:
            raise ConfigError("aperture_diameter_m must be positive")


LOW_FREQUENCY_PRESET = TransducerSpec(
    id="low-5.1mhz",
    center_frequency_hz=5.1e6,
    fractional_bandwidth=0.52,
    mount=Mount.TOP,
)

HIGH_FREQUENCY_PRESET = TransducerSpec(
    id="high-18.3mhz",
    center_frequency_hz=18.3e6,
    fractional_bandwidth=0.51,
    mount=Mount.BOTTOM,
)

TRANSDUCER_PRESETS = {"low": LOW_FREQUENCY_PRESET, "high": HIGH_FREQUENCY_PRESET}


@dataclass(frozen=True)
class PulseWaveform:
    """Sampled excitation pulse with its time origin.

    samples[t0_index] is the t=0 sample; the envelope is even about it.
    """

    samples: np.ndarray = field(repr=False)
    sample_rate_hz: float
    t0_index: int

    @property
    def times_s(self) -> np.ndarray:
        return (np.arange(self.samples.size) - self.t0_index) / self.sample_rate_hz


def pulse_sigma_s(spec: TransducerSpec) -> float:
    """Envelope Gaussian sigma (seconds) matching the -6 dB bandwidth.

    The amplitude spectrum of exp(-t^2/(2 sigma^2)) cos(2 pi f0 t) falls to
    half its peak at f0 +- fbw*f0/2 when sigma = 2 sqrt(2 ln 2)/(2 pi fbw f0).
    """
    return GAUSSIAN_FWHM_FACTOR / (
        2.0 * np.pi * spec.fractional_bandwidth * spec.center_frequency_hz
    )


def envelope_fwhm_s(spec: TransducerSpec) -> float:
    """Full width at half maximum of the pulse envelope, in seconds."""
    return GAUSSIAN_FWHM_FACTOR * pulse_sigma_s(spec)


def axial_fwhm_m(spec: TransducerSpec, medium: Medium = TISSUE) -> float:
    """Closed-form axial resolution: c * (envelope FWHM) / 2."""
    return medium.sound_speed_mps * envelope_fwhm_s(spec) / 2.0


def pulse_envelope(spec: TransducerSpec, times_s) -> np.ndarray:
    """Untruncated Gaussian envelope of the excitation pulse at given times."""
    sigma = pulse_sigma_s(spec)
    t = np.asarray(times_s, dtype=float)
    return np.exp(-0.5 * (t / sigma) ** 2)


def make_pulse(spec: TransducerSpec, sample_rate_hz: float) -> PulseWaveform:
    """Sample the Gaussian-modulated cosine pulse on a uniform time grid.

    The grid is symmetric about t=0 and truncated at +-4 envelope sigmas, so
    the peak sample equals 1 exactly and the envelope is even about t0_index.

    Raises UndersampledError if sample_rate_hz < 4 * center frequency.
    """
    if sample_rate_hz < MIN_SAMPLES_PER_CYCLE * spec.center_frequency_hz:
        raise UndersampledError(
            f"sample rate {sample_rate_hz:g} Hz undersamples a "
            f"{spec.center_frequency_hz:g} Hz pulse; need >= "
            f"{MIN_SAMPLES_PER_CYCLE * spec.center_frequency_hz:g} Hz"
        )
    sigma = pulse_sigma_s(spec)
    half = int(np.floor(PULSE_TRUNCATION_SIGMAS * sigma * sample_rate_hz))
    t = np.arange(-half, half + 1) / sample_rate_hz
    samples = pulse_envelope(spec, t) * np.cos(
        2.0 * np.pi * spec.center_frequency_hz * t
    )
    return PulseWaveform(samples=samples, sample_rate_hz=sample_rate_hz, t0_index=half)


def lateral_beam_fwhm(
    spec: TransducerSpec, depth_m: float, medium: Medium = TISSUE
) -> float:
    """Lateral beam width (FWHM, meters) at a given depth.

    Focused Gaussian beam model: w(z) = w_f sqrt(1 + ((z - F)/F)^2) where the
    focal width w_f = lambda F / D.
    """
    if depth_m <= 0:
        raise ConfigError("depth_m must be positive")
    wavelength = medium.sound_speed_mps / spec.center_frequency_hz
    w_focus = wavelength * spec.focal_depth_m / spec.aperture_diameter_m
    z = depth_m / spec.focal_depth_m - 1.0
    return w_focus * np.sqrt(1.0 + z * z)


def attenuation_factor(
    spec: TransducerSpec, depth_m: float, medium: Medium = TISSUE
) -> float:
    """Round-trip amplitude attenuation factor at a given one-way depth.

    10^(-(alpha * f_MHz * 2 * z_cm) / 20) with alpha in dB/(cm MHz).
    """
    if depth_m < 0:
        raise ConfigError("depth_m must be non-negative")
    f_mhz = spec.center_frequency_hz / 1e6
    z_cm = depth_m * 100.0
    db = medium.attenuation_db_cm_mhz * f_mhz * 2.0 * z_cm
    return float(10.0 ** (-db / 20.0))


def psf_amplitude(
    spec: TransducerSpec,
    axial_offset_m: float,
    lateral_offset_m: float,
    depth_m: float,
    medium: Medium = TISSUE,
) -> float:
    """Separable point-spread amplitude around a point at depth_m.

    Axial factor: pulse envelope at the round-trip time offset 2*dz/c.
    Lateral factor: Gaussian with FWHM equal to the beam width at depth_m.
    Equals 1 at (0, 0) and 0.5 at lateral_offset = w(depth)/2.
    """
    t = 2.0 * axial_offset_m / medium.sound_speed_mps
    axial = pulse_envelope(spec, t)
    w = lateral_beam_fwhm(spec, depth_m, medium)
    lateral = np.exp(-4.0 * np.log(2.0) * (lateral_offset_m / w) ** 2)
    return float(axial * lateral)
