import numpy as np
import pytest

from sonopair.acoustics import WATER, TransducerSpec, Mount
from sonopair.scanner import ProbeGeometry


@pytest.fixture(scope="session")
def tiny_geometry():
    # Small frame keeps per-test simulation under ~50 ms.
    return ProbeGeometry(
        scanlines_per_frame=48,
        rf_sample_rate_hz=80e6,
        depth_m=0.008,
        roi_span_deg=40.0,
    )


@pytest.fixture(scope="session")
def tiny_low():
    return TransducerSpec(
        id="tiny-low",
        center_frequency_hz=5.1e6,
        fractional_bandwidth=0.52,
        focal_depth_m=0.006,
        aperture_diameter_m=0.003,
        mount=Mount.TOP,
    )


@pytest.fixture(scope="session")
def tiny_high():
    return TransducerSpec(
        id="tiny-high",
        center_frequency_hz=18.3e6,
        fractional_bandwidth=0.51,
        focal_depth_m=0.006,
        aperture_diameter_m=0.003,
        mount=Mount.BOTTOM,
    )


@pytest.fixture(scope="session")
def water():
    return WATER


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
