"""Dataset manifest and patch-file IO.

The trainer exchanges data with the simulator toolkit purely through its
file formats: the dataset-manifest/1 JSON document and 8-bit binary PGM
patch files. Nothing in this package imports the simulator; the formats
are the contract.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MANIFEST_FORMAT = "dataset-manifest/1"


class ConfigError(ValueError):
    """Bad option or configuration value."""


class DataError(ValueError):
    """Missing, malformed, or inconsistent input data."""


def read_pgm(path):
    """Read an 8-bit binary PGM into a uint8 (rows, cols) array."""
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"PGM file not found: {path}") from e
    if not blob.startswith(b"P5"):
        raise DataError(f"{path} is not a binary PGM file")
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
        if start == pos:
            raise DataError(f"{path}: truncated PGM header")
        tokens.append(blob[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if maxval > 255:
        raise DataError(f"{path}: only 8-bit PGMs are supported")
    data = blob[pos + 1 : pos + 1 + width * height]
    if len(data) != width * height:
        raise DataError(f"{path}: pixel data shorter than header promises")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width)


def write_pgm(path, pixels):
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8 or pixels.ndim != 2:
        raise DataError("write_pgm expects a 2D uint8 array")
    h, w = pixels.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes())


def load_manifest(path):
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise DataError(f"manifest not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not valid JSON: {e}") from e
    if doc.get("format") != MANIFEST_FORMAT:
        raise DataError(
            f"{path}: format {doc.get('format')!r}, expected {MANIFEST_FORMAT!r}"
        )
    for key in ("patch_size", "fold_count", "entries"):
        if key not in doc:
            raise DataError(f"{path}: manifest missing {key!r}")
    for entry in doc["entries"]:
        if len(entry["low"]) != len(entry["high"]):
            raise DataError(
                f"{path}: entry {entry.get('id')!r} has unequal patch lists"
            )
    return doc


@dataclass(frozen=True)
class PairRecord:
    """One source pair: aligned low/high patch files on disk."""

    id: str
    fold: int
    low_files: tuple
    high_files: tuple


def manifest_pairs(doc, patches_dir):
    base = Path(patches_dir)
    return [
        PairRecord(
            id=e["id"],
            fold=int(e["fold"]),
            low_files=tuple(base / name for name in e["low"]),
            high_files=tuple(base / name for name in e["high"]),
        )
        for e in doc["entries"]
    ]


def split_records(records, fold_count, test_folds, train_folds=None):
    """Partition pair records by fold label.

    train_folds defaults to every fold not named in test_folds. Overlapping
    or out-of-range fold lists are configuration mistakes and raise.
    """
    test = set(int(f) for f in test_folds)
    for f in test:
        if not 0 <= f < fold_count:
            raise ConfigError(f"test fold {f} out of range for {fold_count} folds")
    if train_folds is None:
        train = set(range(fold_count)) - test
    else:
        train = set(int(f) for f in train_folds)
        for f in train:
            if not 0 <= f < fold_count:
                raise ConfigError(
                    f"train fold {f} out of range for {fold_count} folds"
                )
    overlap = train & test
    if overlap:
        raise ConfigError(f"train and test folds overlap: {sorted(overlap)}")
    train_recs = [r for r in records if r.fold in train]
    test_recs = [r for r in records if r.fold in test]
    if not train_recs:
        raise DataError("no pairs in the training folds")
    return train_recs, test_recs


def load_patch_arrays(records, expected_size=None):
    """All (low, high) uint8 patch pairs of the given records, in order."""
    out = []
    for rec in records:
        for low_path, high_path in zip(rec.low_files, rec.high_files):
            low = read_pgm(low_path)
            high = read_pgm(high_path)
            if low.shape != high.shape:
                raise DataError(
                    f"{low_path.name} / {high_path.name}: shape mismatch"
                )
            if expected_size is not None and low.shape != (
                expected_size,
                expected_size,
            ):
                raise DataError(
                    f"{low_path.name}: patch shape {low.shape} does not match "
                    f"manifest patch_size {expected_size}"
                )
            out.append((low, high))
    return out


def to_unit(pixels):
    """uint8 [0, 255] -> float32 [-1, 1]."""
    return pixels.astype(np.float32) / 127.5 - 1.0


def to_bytes(unit):
    """float [-1, 1] -> uint8, round-half-even, clipped."""
    return np.clip(np.rint((unit + 1.0) * 127.5), 0, 255).astype(np.uint8)
