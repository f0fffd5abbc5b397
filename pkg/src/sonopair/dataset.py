"""Patch extraction, overlap-average reconstruction, folds, dataset export.

The stock 436x1000 beam-space image tiles into exactly eight 256x256 patches
(column origins 0/180, row origins 0/248/496/744). Grids for other sizes
follow the same strides with a final origin clamped to the image edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .imaging import ImagePair, quantize, read_pgm, write_pgm

MANIFEST_FORMAT = "dataset-manifest/1"

PATCH_SIZE = 256
STRIDE_COLS = 180
STRIDE_ROWS = 248
FREQUENCIES = ("low", "high")


def _axis_origins(length: int, size: int, stride: int) -> tuple[int, ...]:
    if length < size:
        raise ConfigError(f"image extent {length} is smaller than patch size {size}")
    xs = list(range(0, length - size + 1, stride))
    if xs[-1] != length - size:
        xs.append(length - size)  # clamp the final origin to the edge
    return tuple(xs)


@dataclass(frozen=True)
class PatchGrid:
    """Deterministic patch layout over a fixed source image size."""

    source_cols: int = 436
    source_rows: int = 1000
    patch_size: int = PATCH_SIZE
    stride_cols: int = STRIDE_COLS
    stride_rows: int = STRIDE_ROWS

    def __post_init__(self):
        if self.patch_size < 1:
            raise ConfigError("patch_size must be positive")
        if self.stride_cols < 1 or self.stride_rows < 1:
            raise ConfigError("strides must be positive")
        # Raises if the source is smaller than one patch.
        _axis_origins(self.source_cols, self.patch_size, self.stride_cols)
        _axis_origins(self.source_rows, self.patch_size, self.stride_rows)

    @property
    def col_origins(self) -> tuple[int, ...]:
        return _axis_origins(self.source_cols, self.patch_size, self.stride_cols)

    @property
    def row_origins(self) -> tuple[int, ...]:
        return _axis_origins(self.source_rows, self.patch_size, self.stride_rows)

    @property
    def origins(self) -> tuple[tuple[int, int], ...]:
        """(col, row) origins in row-major order."""
        return tuple(
            (c, r) for r in self.row_origins for c in self.col_origins
        )


@dataclass(frozen=True)
class Patch:
    """One square crop of a source image."""

    pixels: np.ndarray = field(repr=False)
    origin: tuple[int, int]  # (col, row)
    source_id: str
    frequency: str

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise ConfigError(f"frequency must be one of {FREQUENCIES}")


@dataclass
class PatchSet:
    source_id: str
    grid: PatchGrid
    low: list[Patch]
    high: list[Patch]


def patchify_array(pixels: np.ndarray, grid: PatchGrid):
    """Yield (origin, view) crops in the grid's row-major origin order."""
    if pixels.shape != (grid.source_rows, grid.source_cols):
        raise DataError(
            f"image shape {pixels.shape} does not match grid "
            f"({grid.source_rows}, {grid.source_cols})"
        )
    s = grid.patch_size
    for col, row in grid.origins:
        yield (col, row), pixels[row : row + s, col : col + s]


def patchify(pair: ImagePair, grid: PatchGrid, source_id: str) -> PatchSet:
    """Crop both images of a pair on the shared grid."""
    out = {}
    for freq, image in (("low", pair.low), ("high", pair.high)):
        out[freq] = [
            Patch(pixels=np.array(view), origin=origin, source_id=source_id,
                  frequency=freq)
            for origin, view in patchify_array(image.pixels, grid)
        ]
    return PatchSet(source_id=source_id, grid=grid, low=out["low"], high=out["high"])


def _tent(size: int) -> np.ndarray:
    ramp = np.minimum(np.arange(size) + 1, size - np.arange(size)).astype(float)
    return ramp


def reconstruct(
    patches, grid: PatchGrid, blend: str = "mean"
) -> np.ndarray:
    """Reassemble a full image from (origin, pixels) items.

    blend="mean" averages overlapping values with equal weights, so a patch
    set cut from one image reconstructs it bit-exactly. blend="feather"
    weights each patch with a separable tent window before normalizing, for
    seam-artifact comparisons. The patch set must cover the grid exactly.
    """
    if blend not in ("mean", "feather"):
        raise ConfigError(f"unknown blend {blend!r}")
    items = []
    for p in patches:
        origin, pixels = (p.origin, p.pixels) if isinstance(p, Patch) else p
        items.append((tuple(origin), np.asarray(pixels, dtype=float)))
    got = [o for o, _ in items]
    expected = list(grid.origins)
    if sorted(got) != sorted(expected):
        missing = sorted(set(expected) - set(got))
        extra = sorted(set(got) - set(expected))
        raise DataError(
            f"incomplete patch set: missing origins {missing}, extra {extra}"
        )
    s = grid.patch_size
    acc = np.zeros((grid.source_rows, grid.source_cols))
    weight = np.zeros_like(acc)
    w_patch = (
        np.outer(_tent(s), _tent(s)) if blend == "feather" else np.ones((s, s))
    )
    for (col, row), pixels in items:
        if pixels.shape != (s, s):
            raise DataError(
                f"patch at {(col, row)} has shape {pixels.shape}, expected {(s, s)}"
            )
        acc[row : row + s, col : col + s] += pixels * w_patch
        weight[row : row + s, col : col + s] += w_patch
    return acc / weight


@dataclass(frozen=True)
class FoldAssignment:
    """Disjoint, exhaustive k-fold split of n items."""

    k: int
    seed: int
    fold_of: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.fold_of.size)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.bincount(self.fold_of, minlength=self.k))

    def indices(self, fold: int) -> np.ndarray:
        if not 0 <= fold < self.k:
            raise ConfigError(f"fold {fold} out of range for k={self.k}")
        return np.flatnonzero(self.fold_of == fold)


def split_folds(n: int, k: int, seed: int) -> FoldAssignment:
    """Seeded permutation split; fold 0 absorbs the remainder.

    Sizes are n//k per fold with fold 0 taking the extra n%k items, e.g.
    n=442, k=5 gives (90, 88, 88, 88, 88).
    """
    if k < 1:
        raise ConfigError("k must be at least 1")
    if n < k:
        raise ConfigError(f"cannot split {n} items into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = [n // k] * k
    sizes[0] += n % k
    fold_of = np.empty(n, dtype=np.int64)
    start = 0
    for fold, size in enumerate(sizes):
        fold_of[perm[start : start + size]] = fold
        start += size
    return FoldAssignment(k=k, seed=seed, fold_of=fold_of)


def patch_filename(source_id: str, origin: tuple[int, int], frequency: str) -> str:
    col, row = origin
    return f"{source_id}_c{col:04d}_r{row:04d}_{frequency}.pgm"


def export_for_training(
    items, folds: FoldAssignment, out_dir, grid: PatchGrid | None = None
) -> Path:
    """Write patch PGM files and a manifest for a list of (id, ImagePair).

    Returns the manifest path. File contents are a pure function of the
    inputs (no timestamps), so identical inputs export byte-identically.
    """
    items = list(items)
    if folds.n != len(items):
        raise DataError(
            f"fold assignment covers {folds.n} items but {len(items)} pairs given"
        )
    ids = [source_id for source_id, _ in items]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate source ids in export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (source_id, pair) in enumerate(items):
        if grid is None:
            rows, cols = pair.low.pixels.shape
            grid = PatchGrid(source_cols=cols, source_rows=rows)
        patchify(pair, grid, source_id)  # validates shapes against the grid
        files = {}
        for freq, image in (("low", pair.low), ("high", pair.high)):
            names = []
            u8 = quantize(image)
            for origin, view in patchify_array(u8, grid):
                name = patch_filename(source_id, origin, freq)
                write_pgm(out / name, view)
                names.append(name)
            files[freq] = names
        entries.append(
            {
                "id": source_id,
                "fold": int(folds.fold_of[i]),
                "origins": [list(o) for o in grid.origins],
                "low": files["low"],
                "high": files["high"],
            }
        )
    manifest = {
        "format": MANIFEST_FORMAT,
        "patch_size": grid.patch_size,
        "stride_cols": grid.stride_cols,
        "stride_rows": grid.stride_rows,
        "source_cols": grid.source_cols,
        "source_rows": grid.source_rows,
        "fold_count": folds.k,
        "fold_seed": folds.seed,
        "entries": entries,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def load_manifest(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"manifest not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"manifest {path} is not valid JSON: {e}") from e
    if doc.get("format") != MANIFEST_FORMAT:
        raise DataError(
            f"unsupported manifest format {doc.get('format')!r}; "
            f"expected {MANIFEST_FORMAT!r}"
        )
    required = {
        "patch_size", "stride_cols", "stride_rows",
        "source_cols", "source_rows", "fold_count", "fold_seed", "entries",
    }
    missing = required - doc.keys()
    if missing:
        raise DataError(f"manifest {path} is missing fields: {sorted(missing)}")
    return doc


def manifest_grid(doc: dict) -> PatchGrid:
    return PatchGrid(
        source_cols=doc["source_cols"],
        source_rows=doc["source_rows"],
        patch_size=doc["patch_size"],
        stride_cols=doc["stride_cols"],
        stride_rows=doc["stride_rows"],
    )


def read_entry_patches(doc: dict, patches_dir, entry: dict, frequency: str):
    """Load one entry's patches as [(origin, uint8 pixels)] for a frequency."""
    if frequency not in FREQUENCIES:
        raise ConfigError(f"frequency must be one of {FREQUENCIES}")
    base = Path(patches_dir)
    out = []
    for origin, name in zip(entry["origins"], entry[frequency]):
        pixels = read_pgm(base / name)
        if pixels.shape != (doc["patch_size"], doc["patch_size"]):
            raise DataError(f"{name}: patch shape {pixels.shape} mismatches manifest")
        out.append((tuple(origin), pixels))
    return out
