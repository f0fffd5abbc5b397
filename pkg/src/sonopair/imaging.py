"""Envelope detection, log compression, B-mode images, scan conversion.

Dataset-bound images are stored beam-space: rows index depth below the
acquisition window start (row 0 shallow), columns index scanlines. Scan
conversion to Cartesian is display-only; metrics operate on the beam-space
grid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import hilbert

from .acoustics import TransducerSpec  # noqa: F401  (re-exported for callers)
from .errors import ConfigError, DataError
from .scanner import REFERENCE_SOUND_SPEED_MPS, ProbeGeometry, RFFrame

META_FORMAT = "bmode-meta/1"

DEFAULT_DYNAMIC_RANGE_DB = 50.0
DEFAULT_CEILING = 255.0
DATASET_ROWS = 1000


def envelope(rf_line: np.ndarray, spec: TransducerSpec | None = None) -> np.ndarray:
    """Amplitude envelope of an RF line via the analytic signal.

    The spec argument is accepted for signature symmetry with the line
    synthesizer and is not consulted.
    """
    rf_line = np.asarray(rf_line, dtype=float)
    if rf_line.ndim != 1:
        raise DataError("envelope expects a 1D RF line")
    return np.abs(hilbert(rf_line))


def envelope_frame(frame: RFFrame) -> np.ndarray:
    """Envelope of every line in a frame, shape (lines, samples)."""
    return np.abs(hilbert(np.asarray(frame.data, dtype=float), axis=1))


def log_compress(
    env: np.ndarray,
    dynamic_range_db: float = DEFAULT_DYNAMIC_RANGE_DB,
    ceiling: float = DEFAULT_CEILING,
    reference_max: float | None = None,
) -> np.ndarray:
    """Map envelope amplitudes to display pixels.

    pixel = ceiling * clamp(1 + 20 log10(e / e_max) / DR, 0, 1), with e_max
    the array maximum unless reference_max is given. An all-zero input maps
    to an all-zero image.
    """
    if dynamic_range_db <= 0:
        raise ConfigError("dynamic_range_db must be positive")
    if ceiling <= 0:
        raise ConfigError("ceiling must be positive")
    env = np.asarray(env, dtype=float)
    if np.any(env < 0):
        raise DataError("envelope values must be non-negative")
    ref = float(np.max(env)) if reference_max is None else float(reference_max)
    if ref <= 0:
        return np.zeros_like(env)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(env / ref)
    return ceiling * np.clip(1.0 + db / dynamic_range_db, 0.0, 1.0)


@dataclass(frozen=True)
class ImageMeta:
    """Geometry and display parameters carried with a B-mode image."""

    transducer_id: str
    dynamic_range_db: float
    ceiling: float
    depth_m: float
    window_start_m: float
    roi_start_deg: float
    roi_span_deg: float
    sound_speed_mps: float = REFERENCE_SOUND_SPEED_MPS
    seed: int | None = None


@dataclass
class BModeImage:
    """Log-compressed beam-space image; pixels in [0, ceiling]."""

    pixels: np.ndarray = field(repr=False)
    meta: ImageMeta

    @property
    def rows(self) -> int:
        return self.pixels.shape[0]

    @property
    def cols(self) -> int:
        return self.pixels.shape[1]


@dataclass
class ImagePair:
    low: BModeImage
    high: BModeImage

    def __post_init__(self):
        if self.low.pixels.shape != self.high.pixels.shape:
            raise DataError(
                "paired images must share dimensions, got "
                f"{self.low.pixels.shape} vs {self.high.pixels.shape}"
            )


def resample_rows(
    env: np.ndarray,
    geometry: ProbeGeometry,
    output_rows: int = DATASET_ROWS,
    sound_speed_mps: float = REFERENCE_SOUND_SPEED_MPS,
) -> np.ndarray:
    """Linearly resample per-line envelopes onto the display depth grid.

    Input rows are RF samples (lines x samples); output rows span depths
    j * depth / (output_rows - 1) below the window start. Endpoints clamp.
    """
    if output_rows < 2:
        raise ConfigError("output_rows must be at least 2")
    n = env.shape[1]
    sample_depths = np.arange(n) * sound_speed_mps / (2.0 * geometry.rf_sample_rate_hz)
    row_depths = np.arange(output_rows) * geometry.depth_m / (output_rows - 1)
    out = np.empty((env.shape[0], output_rows))
    for k in range(env.shape[0]):
        out[k] = np.interp(row_depths, sample_depths, env[k])
    return out


def to_dataset_image(
    frame: RFFrame,
    dynamic_range_db: float = DEFAULT_DYNAMIC_RANGE_DB,
    ceiling: float = DEFAULT_CEILING,
    output_rows: int = DATASET_ROWS,
    sound_speed_mps: float = REFERENCE_SOUND_SPEED_MPS,
    seed: int | None = None,
) -> BModeImage:
    """Envelope-detect, resample to the display grid, log-compress.

    Normalization is per-frame (the frame's own envelope maximum), so scaling
    the RF data by a positive constant leaves the image unchanged.
    """
    if frame.geometry is None:
        raise DataError("frame carries no geometry; cannot build an image")
    geometry = frame.geometry
    env = envelope_frame(frame)
    env = resample_rows(env, geometry, output_rows, sound_speed_mps)
    pixels = log_compress(env.T, dynamic_range_db, ceiling)
    meta = ImageMeta(
        transducer_id=frame.transducer_id,
        dynamic_range_db=dynamic_range_db,
        ceiling=ceiling,
        depth_m=geometry.depth_m,
        window_start_m=geometry.window_start_m,
        roi_start_deg=geometry.roi_start_deg,
        roi_span_deg=geometry.roi_span_deg,
        sound_speed_mps=sound_speed_mps,
        seed=seed,
    )
    return BModeImage(pixels=pixels, meta=meta)


def pre_log_envelope_image(
    frame: RFFrame,
    output_rows: int = DATASET_ROWS,
    sound_speed_mps: float = REFERENCE_SOUND_SPEED_MPS,
) -> np.ndarray:
    """Envelope on the display grid without compression (rows x scanlines)."""
    if frame.geometry is None:
        raise DataError("frame carries no geometry; cannot build an image")
    return resample_rows(
        envelope_frame(frame), frame.geometry, output_rows, sound_speed_mps
    ).T


def image_index_to_xy(image: BModeImage, row: float, col: float) -> tuple[float, float]:
    """Plane position of a (possibly fractional) beam-space pixel index."""
    meta = image.meta
    angle = meta.roi_start_deg + col * meta.roi_span_deg / (image.cols - 1)
    radius = meta.window_start_m + row * meta.depth_m / (image.rows - 1)
    return _polar_xy(angle, radius)


def _polar_xy(angle_deg: float, radius_m: float) -> tuple[float, float]:
    a = np.radians(angle_deg)
    return (radius_m * np.sin(a), radius_m * np.cos(a))


def scan_convert(
    image: BModeImage, out_px: int = 512, fill: float = 0.0
) -> tuple[np.ndarray, tuple[float, float, float, float]]:
    """Bilinear polar-to-Cartesian conversion of a beam-space image.

    Returns (raster, extent) where raster is out_px x out_px covering a
    square of side 2 * outer_radius centered on the probe axis, and extent is
    (x_min, x_max, z_min, z_max). Pixels outside the fan get the fill value.
    Raster row 0 is the top of the plane (largest z).
    """
    if out_px < 2:
        raise ConfigError("out_px must be at least 2")
    meta = image.meta
    rows, cols = image.pixels.shape
    r0 = meta.window_start_m
    r1 = meta.window_start_m + meta.depth_m
    half = r1
    step = 2.0 * half / out_px
    centers = -half + step * (np.arange(out_px) + 0.5)
    x = centers[None, :]
    z = (-centers)[:, None]
    radius = np.hypot(x, z)
    angle = np.degrees(np.arctan2(x, z)) % 360.0
    rel = (angle - meta.roi_start_deg) % 360.0
    inside = (radius >= r0) & (radius <= r1) & (rel <= meta.roi_span_deg)
    frow = (radius - r0) / (r1 - r0) * (rows - 1)
    fcol = rel / meta.roi_span_deg * (cols - 1)
    frow = np.clip(frow, 0.0, rows - 1.0)
    fcol = np.clip(fcol, 0.0, cols - 1.0)
    i0 = np.clip(np.floor(frow).astype(int), 0, rows - 2)
    j0 = np.clip(np.floor(fcol).astype(int), 0, cols - 2)
    di = frow - i0
    dj = fcol - j0
    px = image.pixels
    sampled = (
        px[i0, j0] * (1 - di) * (1 - dj)
        + px[i0 + 1, j0] * di * (1 - dj)
        + px[i0, j0 + 1] * (1 - di) * dj
        + px[i0 + 1, j0 + 1] * di * dj
    )
    raster = np.where(inside, sampled, fill)
    return raster, (-half, half, -half, half)


def xy_to_raster_index(
    extent: tuple[float, float, float, float], out_px: int, x: float, z: float
) -> tuple[float, float]:
    """Fractional raster (row, col) of a plane point for a scan_convert call."""
    x_min, x_max, z_min, z_max = extent
    col = (x - x_min) / (x_max - x_min) * out_px - 0.5
    row = (z_max - z) / (z_max - z_min) * out_px - 0.5
    return row, col


def quantize(image: BModeImage) -> np.ndarray:
    """8-bit pixels for export; the display ceiling maps to 255."""
    scale = 255.0 / image.meta.ceiling
    return np.rint(np.clip(image.pixels * scale, 0.0, 255.0)).astype(np.uint8)


def write_pgm(path, pixels: np.ndarray) -> None:
    """Write an 8-bit binary PGM (documented in docs/formats.md)."""
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8 or pixels.ndim != 2:
        raise DataError("write_pgm expects a 2D uint8 array")
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"PGM file not found: {path}") from e
    if not blob.startswith(b"P5"):
        raise DataError(f"{path} is not a binary PGM file")
    # Header: magic, width, height, maxval tokens separated by whitespace.
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise DataError(f"{path}: only maxval 255 PGM is supported")
    payload = blob[pos : pos + w * h]
    if len(payload) != w * h:
        raise DataError(f"{path}: truncated pixel payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w)


def save_bmode(path_base, image: BModeImage) -> tuple[Path, Path]:
    """Write <base>.pgm plus a <base>.json metadata sidecar."""
    base = Path(path_base)
    pgm = base.with_suffix(".pgm")
    sidecar = base.with_suffix(".json")
    write_pgm(pgm, quantize(image))
    doc = {"format": META_FORMAT, **asdict(image.meta)}
    sidecar.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return pgm, sidecar


def load_bmode(path_base) -> BModeImage:
    base = Path(path_base)
    pixels = read_pgm(base.with_suffix(".pgm")).astype(float)
    sidecar = base.with_suffix(".json")
    try:
        doc = json.loads(sidecar.read_text())
    except FileNotFoundError as e:
        raise DataError(f"metadata sidecar not found: {sidecar}") from e
    if doc.pop("format", None) != META_FORMAT:
        raise DataError(f"{sidecar}: unsupported metadata format")
    try:
        meta = ImageMeta(**doc)
    except TypeError as e:
        raise DataError(f"{sidecar}: malformed metadata: {e}") from e
    return BModeImage(pixels=pixels, meta=meta)
