import math

import numpy as np
import pytest

from sonopair.acoustics import (
    GEL,
    HIGH_FREQUENCY_PRESET,
    LOW_FREQUENCY_PRESET,
    MEDIUM_PRESETS,
    TISSUE,
    TRANSDUCER_PRESETS,
    WATER,
    Medium,
    Mount,
    TransducerSpec,
    attenuation_factor,
    axial_fwhm_m,
    envelope_fwhm_s,
    lateral_beam_fwhm,
    make_pulse,
    pulse_envelope,
    pulse_sigma_s,
    psf_amplitude,
)
from sonopair.errors import ConfigError, UndersampledError
from sonopair.metrics import fwhm


def spectrum_crossings_mhz(spec, rate_hz=400e6):
    """-6 dB amplitude-spectrum crossings found by walking out from the peak."""
    pulse = make_pulse(spec, rate_hz)
    n = 1 << 18
    amp = np.abs(np.fft.rfft(pulse.samples, n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate_hz)
    i = int(np.argmax(amp))
    half = amp[i] / 2.0

    def cross(step):
        j = i
        while amp[j + step] >= half:
            j += step
        frac = (amp[j] - half) / (amp[j] - amp[j + step])
        return freqs[j] + step * frac * (freqs[1] - freqs[0])

    return cross(-1) / 1e6, cross(+1) / 1e6


class TestPulse:
    def test_low_preset_bandwidth_crossings(self):
        # f0 (1 +/- fbw/2) = 5.1 (1 +/- 0.26) MHz for the low preset.
        lo, hi = spectrum_crossings_mhz(LOW_FREQUENCY_PRESET)
        assert lo == pytest.approx(3.774, abs=0.02)
        assert hi == pytest.approx(6.426, abs=0.02)

    def test_high_preset_bandwidth_crossings(self):
        lo, hi = spectrum_crossings_mhz(HIGH_FREQUENCY_PRESET)
        assert lo == pytest.approx(18.3 * (1 - 0.255), abs=0.06)
        assert hi == pytest.approx(18.3 * (1 + 0.255), abs=0.06)

    def test_envelope_fwhm_matches_gaussian_sigma(self):
        sigma = pulse_sigma_s(LOW_FREQUENCY_PRESET)
        expected = 2.0 * math.sqrt(2.0 * math.log(2.0)) * sigma
        assert envelope_fwhm_s(LOW_FREQUENCY_PRESET) == pytest.approx(
            expected, rel=1e-12
        )

    def test_sampled_envelope_fwhm(self):
        rate = 200e6
        pulse = make_pulse(LOW_FREQUENCY_PRESET, rate)
        env = pulse_envelope(LOW_FREQUENCY_PRESET, pulse.times_s)
        measured = fwhm(env, spacing=1.0 / rate)
        assert measured == pytest.approx(envelope_fwhm_s(LOW_FREQUENCY_PRESET), rel=1e-3)

    def test_pulse_peaks_at_t0_index(self):
        pulse = make_pulse(HIGH_FREQUENCY_PRESET, 100e6)
        assert int(np.argmax(np.abs(pulse.samples))) == pulse.t0_index
        assert pulse.samples[pulse.t0_index] == pytest.approx(1.0)

    def test_pulse_is_truncated_symmetrically(self):
        pulse = make_pulse(LOW_FREQUENCY_PRESET, 100e6)
        assert pulse.samples.size == 2 * pulse.t0_index + 1
        # Tails sit at the 4-sigma level of the Gaussian envelope.
        tail = abs(pulse.samples[0])
        assert tail < math.exp(-(4.0**2) / 2.0) * 1.01

    def test_undersampled_pulse_rejected(self):
        with pytest.raises(UndersampledError):
            make_pulse(HIGH_FREQUENCY_PRESET, 4 * 18.3e6 - 1.0)

    def test_axial_fwhm_is_half_envelope_extent(self):
        for spec in (LOW_FREQUENCY_PRESET, HIGH_FREQUENCY_PRESET):
            expected = 1540.0 * envelope_fwhm_s(spec) / 2.0
            assert axial_fwhm_m(spec, TISSUE) == pytest.approx(expected, rel=1e-12)


class TestBeamAndAttenuation:
    def test_focal_width_is_lambda_f_over_d(self):
        spec = LOW_FREQUENCY_PRESET
        wavelength = 1540.0 / spec.center_frequency_hz
        expected = wavelength * spec.focal_depth_m / spec.aperture_diameter_m
        assert lateral_beam_fwhm(spec, spec.focal_depth_m, TISSUE) == pytest.approx(
            expected, rel=1e-12
        )

    def test_beam_widens_away_from_focus(self):
        spec = HIGH_FREQUENCY_PRESET
        at_focus = lateral_beam_fwhm(spec, spec.focal_depth_m, WATER)
        assert lateral_beam_fwhm(spec, 0.005, WATER) > at_focus
        assert lateral_beam_fwhm(spec, 0.035, WATER) > at_focus

    def test_attenuation_frozen_value(self):
        # 0.5 dB/cm/MHz * 5.1 MHz * 2 * 1 cm = 5.1 dB -> 0.5559 amplitude.
        got = attenuation_factor(LOW_FREQUENCY_PRESET, 0.01, TISSUE)
        assert got == pytest.approx(0.555904, abs=1e-6)

    def test_attenuation_monotone_in_depth_and_frequency(self):
        a1 = attenuation_factor(LOW_FREQUENCY_PRESET, 0.01, TISSUE)
        a2 = attenuation_factor(LOW_FREQUENCY_PRESET, 0.02, TISSUE)
        a3 = attenuation_factor(HIGH_FREQUENCY_PRESET, 0.01, TISSUE)
        assert a2 < a1
        assert a3 < a1
        assert attenuation_factor(LOW_FREQUENCY_PRESET, 0.0, TISSUE) == 1.0

    def test_psf_amplitude_half_points(self):
        spec = LOW_FREQUENCY_PRESET
        w = lateral_beam_fwhm(spec, 0.01, TISSUE)
        assert psf_amplitude(spec, 0.0, 0.0, 0.01, TISSUE) == pytest.approx(1.0)
        assert psf_amplitude(spec, 0.0, w / 2.0, 0.01, TISSUE) == pytest.approx(0.5)
        dz = 1540.0 * envelope_fwhm_s(spec) / 4.0  # round trip halves the extent
        assert psf_amplitude(spec, dz, 0.0, 0.01, TISSUE) == pytest.approx(0.5)


class TestSpecsAndMedia:
    def test_presets(self):
        assert LOW_FREQUENCY_PRESET.center_frequency_hz == 5.1e6
        assert HIGH_FREQUENCY_PRESET.center_frequency_hz == 18.3e6
        assert LOW_FREQUENCY_PRESET.mount is Mount.TOP
        assert HIGH_FREQUENCY_PRESET.mount is Mount.BOTTOM
        assert set(TRANSDUCER_PRESETS) == {"low", "high"}
        assert set(MEDIUM_PRESETS) == {"tissue", "gel", "water"}
        assert TISSUE.attenuation_db_cm_mhz > GEL.attenuation_db_cm_mhz
        assert GEL.attenuation_db_cm_mhz > WATER.attenuation_db_cm_mhz

    def test_medium_validation(self):
        with pytest.raises(ConfigError):
            Medium(sound_speed_mps=0.0)
        with pytest.raises(ConfigError):
            Medium(attenuation_db_cm_mhz=-0.1)

    def test_transducer_validation(self):
        with pytest.raises(ConfigError):
            TransducerSpec(
                id="bad",
                center_frequency_hz=5e6,
                fractional_bandwidth=2.5,
                focal_depth_m=0.02,
                aperture_diameter_m=0.003,
                mount=Mount.TOP,
            )
        with pytest.raises(ConfigError):
            TransducerSpec(
                id="bad",
                center_frequency_hz=-5e6,
                fractional_bandwidth=0.5,
                focal_depth_m=0.02,
                aperture_diameter_m=0.003,
                mount=Mount.TOP,
            )
