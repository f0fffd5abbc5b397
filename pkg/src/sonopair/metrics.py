"""Image- and signal-quality metrics.

Region statistics are population statistics (ddof=0). eSNR is evaluated on
raw RF amplitudes; CNR and SSNR on B-mode pixels; SSIM/MSE/PSNR/RMSE on
8-bit-scaled image pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ConfigError, DataError, DegenerateRegionError

# Fully developed (Rayleigh) speckle has envelope mean/std = sqrt(pi/(4-pi)).
RAYLEIGH_SSNR = math.sqrt(math.pi / (4.0 - math.pi))


@dataclass(frozen=True)
class RegionStats:
    """Summary statistics of a sample region.

    max is the largest absolute sample (amplitude), so the same definition
    serves bipolar RF data and non-negative pixels.
    """

    mean: float
    std: float
    max: float
    count: int


def region_stats(samples: np.ndarray) -> RegionStats:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DataError("cannot compute statistics of an empty region")
    return RegionStats(
        mean=float(np.mean(x)),
        std=float(np.std(x)),
        max=float(np.max(np.abs(x))),
        count=int(x.size),
    )


def fwhm(profile: np.ndarray, spacing: float = 1.0) -> float:
    """Full width at half maximum of a sampled profile.

    Crossings of half the (unique) global maximum are located by linear
    interpolation on each side of the peak. Raises DataError when the peak is
    non-positive, not unique, or a crossing falls outside the profile.
    """
    p = np.asarray(profile, dtype=float)
    if p.ndim != 1 or p.size < 3:
        raise DataError("fwhm expects a 1D profile of at least 3 samples")
    if spacing <= 0:
        raise ConfigError("spacing must be positive")
    peak = float(np.max(p))
    if peak <= 0:
        raise DataError("fwhm requires a positive peak")
    peak_idx = np.flatnonzero(p == peak)
    if peak_idx.size != 1:
        raise DataError("fwhm requires a unique global maximum")
    i = int(peak_idx[0])
    half = peak / 2.0

    def cross(idx_from: int, step: int) -> float:
        j = idx_from
        while 0 <= j + step < p.size:
            if p[j + step] < half:
                # Interpolate between j (>= half) and j+step (< half).
                frac = (p[j] - half) / (p[j] - p[j + step])
                return j + step * frac
            j += step
        raise DataError("fwhm: profile does not fall below half maximum")

    left = cross(i, -1)
    right = cross(i, +1)
    return (right - left) * spacing


def esnr_db(signal: RegionStats, noise: RegionStats) -> float:
    """Echo SNR: 20 log10(signal max amplitude / noise std)."""
    if noise.std <= 0:
        raise DegenerateRegionError("eSNR undefined: noise region has zero std")
    if signal.max <= 0:
        raise DegenerateRegionError("eSNR undefined: signal region has no echo")
    return 20.0 * math.log10(signal.max / noise.std)


def cnr(target: RegionStats, background: RegionStats) -> float:
    """Contrast-to-noise ratio |mu_T - mu_B| / sqrt(sigma_T^2 + sigma_B^2)."""
    denom = math.sqrt(target.std**2 + background.std**2)
    if denom == 0:
        raise DegenerateRegionError("CNR undefined: both regions are constant")
    return abs(target.mean - background.mean) / denom


def ssnr(region: RegionStats) -> float:
    """Speckle SNR mu / sigma; ~1.913 for fully developed speckle envelopes."""
    if region.std == 0:
        raise DegenerateRegionError("SSNR undefined: region is constant")
    return region.mean / region.std


@dataclass(frozen=True)
class SSIMParams:
    """SSIM configuration: dynamic range ceiling and window size.

    window=None selects Global mode (one set of statistics over the whole
    image); otherwise an odd uniform window slides over all fully interior
    positions and the map is averaged.
    """

    ceiling: float = 255.0
    window: int | None = 7
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self):
        if self.ceiling <= 0:
            raise ConfigError("ceiling must be positive")
        if self.window is not None and (self.window < 3 or self.window % 2 == 0):
            raise ConfigError("window must be odd and >= 3, or None for global")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ConfigError("k1 and k2 must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.ceiling) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.ceiling) ** 2


DEFAULT_SSIM = SSIMParams()
GLOBAL_SSIM = SSIMParams(window=None)


def _as_pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DataError(f"image shapes differ: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise DataError("images are empty")
    return x, y


def ssim(x: np.ndarray, y: np.ndarray, params: SSIMParams = DEFAULT_SSIM) -> float:
    """Structural similarity with population statistics.

    (2 mu_x mu_y + C1)(2 sigma_xy + C2) /
    ((mu_x^2 + mu_y^2 + C1)(sigma_x^2 + sigma_y^2 + C2))
    """
    x, y = _as_pair(x, y)
    if params.window is None:
        mx, my = x.mean(), y.mean()
        vx, vy = x.var(), y.var()
        cov = ((x - mx) * (y - my)).mean()
        return float(
            (2 * mx * my + params.c1)
            * (2 * cov + params.c2)
            / ((mx * mx + my * my + params.c1) * (vx + vy + params.c2))
        )
    w = params.window
    if x.ndim != 2:
        raise DataError("windowed SSIM expects 2D images")
    if min(x.shape) < w:
        raise DataError(f"images smaller than the {w}x{w} SSIM window")
    m = w // 2

    def interior(a):
        return a[m : a.shape[0] - m, m : a.shape[1] - m]

    mu_x = interior(uniform_filter(x, size=w))
    mu_y = interior(uniform_filter(y, size=w))
    xx = interior(uniform_filter(x * x, size=w))
    yy = interior(uniform_filter(y * y, size=w))
    xy = interior(uniform_filter(x * y, size=w))
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    ssim_map = (
        (2 * mu_x * mu_y + params.c1)
        * (2 * cov + params.c2)
        / ((mu_x * mu_x + mu_y * mu_y + params.c1) * (var_x + var_y + params.c2))
    )
    return float(ssim_map.mean())


def mse(x: np.ndarray, y: np.ndarray) -> float:
    """Mean squared pixel difference."""
    x, y = _as_pair(x, y)
    d = x - y
    return float(np.mean(d * d))


def rmse(x: np.ndarray, y: np.ndarray) -> float:
    return math.sqrt(mse(x, y))


def psnr_db(
    x: np.ndarray,
    y: np.ndarray,
    ceiling: float = 255.0,
    use_observed_max: bool = False,
) -> float:
    """Peak SNR 20 log10(L / RMSE); +inf for identical images.

    L is the nominal ceiling by default; use_observed_max substitutes the
    larger observed maximum of the two images.
    """
    if ceiling <= 0:
        raise ConfigError("ceiling must be positive")
    x, y = _as_pair(x, y)
    peak = float(max(x.max(), y.max())) if use_observed_max else float(ceiling)
    if peak <= 0:
        raise DataError("PSNR undefined: observed peak is non-positive")
    r = rmse(x, y)
    if r == 0.0:
        return math.inf
    # This form keeps psnr + 20 log10(rmse) == 20 log10(L) exactly.
    return 20.0 * math.log10(peak) - 20.0 * math.log10(r)


@dataclass
class MetricsReport:
    """Per-pair metric entries plus recomputable aggregates."""

    entries: list[dict]

    def aggregates(self) -> dict:
        keys = sorted({k for e in self.entries for k in e if k != "pair"})
        out = {}
        for k in keys:
            vals = [
                e[k]
                for e in self.entries
                if isinstance(e.get(k), (int, float)) and math.isfinite(e[k])
            ]
            if vals:
                arr = np.asarray(vals, dtype=float)
                out[k] = {
                    "mean": float(arr.mean()),
                    "std": float(arr.std()),
                    "count": len(vals),
                }
        return out

    def to_doc(self) -> dict:
        def clean(v):
            if isinstance(v, float) and math.isinf(v):
                return {"identical": True}
            return v

        return {
            "format": "score-report/1",
            "entries": [{k: clean(v) for k, v in e.items()} for e in self.entries],
            "aggregates": self.aggregates(),
        }
