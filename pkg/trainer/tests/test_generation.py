"""Checkpoint-driven patch generation."""

import json

import numpy as np
import pytest

from sonotrain.generate import generate
from sonotrain.patches import DataError, load_manifest, read_pgm


def test_writes_one_patch_per_low_input_under_high_names(
        desk_checkpoint, desk_dataset, tmp_path):
    written = generate(desk_checkpoint, desk_dataset / "manifest.json",
                       desk_dataset, tmp_path)
    doc = load_manifest(desk_dataset / "manifest.json")
    expected = [name for e in doc["entries"] for name in e["high"]]
    assert sorted(written) == sorted(expected)
    img = read_pgm(tmp_path / written[0])
    assert img.dtype == np.uint8
    assert img.shape == (doc["patch_size"], doc["patch_size"])
    assert np.ptp(img) > 0


def test_same_checkpoint_and_input_give_identical_bytes(
        desk_checkpoint, desk_dataset, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    names = generate(desk_checkpoint, desk_dataset / "manifest_fold0.json",
                     desk_dataset, a)
    generate(desk_checkpoint, desk_dataset / "manifest_fold0.json",
             desk_dataset, b)
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_id_filter(desk_checkpoint, desk_dataset, tmp_path):
    written = generate(desk_checkpoint, desk_dataset / "manifest.json",
                       desk_dataset, tmp_path, ids=["p03"])
    assert written == ["p03_c0000_r0000_high.pgm"]


def test_unknown_id(desk_checkpoint, desk_dataset, tmp_path):
    with pytest.raises(DataError, match="p99"):
        generate(desk_checkpoint, desk_dataset / "manifest.json",
                 desk_dataset, tmp_path, ids=["p99"])


def test_rejects_patch_size_the_generator_cannot_take(
        desk_checkpoint, desk_dataset, tmp_path):
    # 60 is not divisible by the encoder's 2**3 downsampling
    doc = json.loads((desk_dataset / "manifest.json").read_text())
    doc["patch_size"] = 60
    doc["entries"] = []
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="divisible"):
        generate(desk_checkpoint, bad, desk_dataset, tmp_path / "out")


def test_rejects_patch_that_disagrees_with_manifest(
        desk_checkpoint, desk_dataset, tmp_path):
    doc = json.loads((desk_dataset / "manifest.json").read_text())
    doc["patch_size"] = 32
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="shape"):
        generate(desk_checkpoint, bad, desk_dataset, tmp_path / "out")
