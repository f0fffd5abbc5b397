import json

import numpy as np
import pytest

from sonopair.dataset import (
    FREQUENCIES,
    Patch,
    PatchGrid,
    export_for_training,
    load_manifest,
    manifest_grid,
    patch_filename,
    patchify,
    patchify_array,
    read_entry_patches,
    reconstruct,
    split_folds,
)
from sonopair.errors import ConfigError, DataError
from sonopair.imaging import BModeImage, ImageMeta, ImagePair, quantize


def make_pair(rows=1000, cols=436, seed=0):
    rng = np.random.default_rng(seed)
    meta = ImageMeta("t-low", 50.0, 255.0, 0.02, 0.002, 127.0, 106.0)
    low = BModeImage(np.floor(rng.random((rows, cols)) * 256.0), meta)
    meta_h = ImageMeta("t-high", 50.0, 255.0, 0.02, 0.002, 127.0, 106.0)
    high = BModeImage(np.floor(rng.random((rows, cols)) * 256.0), meta_h)
    return ImagePair(low=low, high=high)


class TestGrid:
    def test_stock_origins(self):
        grid = PatchGrid()
        assert grid.col_origins == (0, 180)
        assert grid.row_origins == (0, 248, 496, 744)
        assert len(grid.origins) == 8
        # Row-major: all columns of a row before the next row.
        assert grid.origins[:2] == ((0, 0), (180, 0))

    def test_edge_clamp_appends_final_origin(self):
        grid = PatchGrid(source_cols=437, source_rows=1000)
        assert grid.col_origins == (0, 180, 181)

    def test_exact_fit_has_no_duplicate(self):
        # 256 + 180 = 436 lands exactly on the edge; no extra origin.
        grid = PatchGrid(source_cols=436)
        assert grid.col_origins == (0, 180)

    def test_minimum_size(self):
        grid = PatchGrid(source_cols=256, source_rows=256)
        assert grid.origins == ((0, 0),)
        with pytest.raises(ConfigError):
            PatchGrid(source_cols=255)
        with pytest.raises(ConfigError):
            PatchGrid(stride_cols=0)

    def test_patchify_array_views(self):
        px = np.arange(1000 * 436, dtype=float).reshape(1000, 436)
        crops = dict(patchify_array(px, PatchGrid()))
        assert len(crops) == 8
        np.testing.assert_array_equal(crops[(180, 744)], px[744:1000, 180:436])
        with pytest.raises(DataError):
            list(patchify_array(px[:999], PatchGrid()))


class TestPatchify:
    def test_pair_patch_sets(self):
        pair = make_pair()
        ps = patchify(pair, PatchGrid(), "frame-000")
        assert len(ps.low) == len(ps.high) == 8
        assert all(p.frequency == "low" for p in ps.low)
        assert all(p.source_id == "frame-000" for p in ps.low + ps.high)
        first = ps.high[0]
        np.testing.assert_array_equal(first.pixels, pair.high.pixels[:256, :256])

    def test_patch_frequency_validation(self):
        with pytest.raises(ConfigError):
            Patch(np.zeros((2, 2)), (0, 0), "x", "mid")


class TestReconstruct:
    def test_mean_blend_is_bit_exact(self):
        pair = make_pair(seed=3)
        grid = PatchGrid()
        ps = patchify(pair, grid, "x")
        recon = reconstruct(ps.low, grid)
        np.testing.assert_array_equal(recon, pair.low.pixels)

    def test_feather_blend_recovers_single_image(self):
        pair = make_pair(seed=4)
        grid = PatchGrid()
        ps = patchify(pair, grid, "x")
        recon = reconstruct(ps.high, grid, blend="feather")
        np.testing.assert_allclose(recon, pair.high.pixels, rtol=1e-12, atol=1e-9)

    def test_accepts_origin_pixel_tuples(self):
        px = np.arange(256 * 256, dtype=float).reshape(256, 256)
        grid = PatchGrid(source_cols=256, source_rows=256)
        recon = reconstruct([((0, 0), px)], grid)
        np.testing.assert_array_equal(recon, px)

    def test_incomplete_set_rejected(self):
        pair = make_pair(seed=5)
        grid = PatchGrid()
        ps = patchify(pair, grid, "x")
        with pytest.raises(DataError, match="missing origins"):
            reconstruct(ps.low[:-1], grid)

    def test_extra_patch_rejected(self):
        grid = PatchGrid(source_cols=256, source_rows=256)
        px = np.zeros((256, 256))
        with pytest.raises(DataError, match="extra"):
            reconstruct([((0, 0), px), ((7, 7), px)], grid)

    def test_wrong_patch_shape_rejected(self):
        grid = PatchGrid(source_cols=256, source_rows=256)
        with pytest.raises(DataError, match="shape"):
            reconstruct([((0, 0), np.zeros((255, 256)))], grid)

    def test_unknown_blend_rejected(self):
        grid = PatchGrid(source_cols=256, source_rows=256)
        with pytest.raises(ConfigError):
            reconstruct([((0, 0), np.zeros((256, 256)))], grid, blend="median")


class TestFolds:
    def test_remainder_goes_to_fold_zero(self):
        folds = split_folds(442, 5, seed=0)
        assert folds.counts == (90, 88, 88, 88, 88)

    def test_disjoint_and_exhaustive(self):
        folds = split_folds(37, 4, seed=9)
        seen = np.concatenate([folds.indices(f) for f in range(4)])
        assert sorted(seen.tolist()) == list(range(37))

    def test_deterministic_and_seed_sensitive(self):
        a = split_folds(50, 5, seed=1)
        b = split_folds(50, 5, seed=1)
        c = split_folds(50, 5, seed=2)
        np.testing.assert_array_equal(a.fold_of, b.fold_of)
        assert not np.array_equal(a.fold_of, c.fold_of)

    def test_validation(self):
        with pytest.raises(ConfigError):
            split_folds(10, 0, seed=0)
        with pytest.raises(ConfigError):
            split_folds(3, 5, seed=0)
        with pytest.raises(ConfigError):
            split_folds(10, 3, seed=0).indices(3)


class TestExport:
    def test_round_trip(self, tmp_path):
        pairs = [(f"frame-{i:03d}", make_pair(seed=i)) for i in range(3)]
        folds = split_folds(3, 3, seed=0)
        manifest_path = export_for_training(pairs, folds, tmp_path / "out")
        doc = load_manifest(manifest_path)
        assert doc["fold_count"] == 3
        assert [e["id"] for e in doc["entries"]] == [
            "frame-000", "frame-001", "frame-002",
        ]
        grid = manifest_grid(doc)
        assert grid.origins == PatchGrid().origins
        # Patches on disk reassemble the quantized source image.
        entry = doc["entries"][1]
        for freq in FREQUENCIES:
            patches = read_entry_patches(doc, tmp_path / "out", entry, freq)
            recon = reconstruct(patches, grid)
            source = quantize(getattr(pairs[1][1], freq))
            np.testing.assert_array_equal(recon, source.astype(float))

    def test_export_is_byte_deterministic(self, tmp_path):
        pairs = [("a", make_pair(seed=1)), ("b", make_pair(seed=2))]
        folds = split_folds(2, 2, seed=5)
        p1 = export_for_training(pairs, folds, tmp_path / "one")
        p2 = export_for_training(pairs, folds, tmp_path / "two")
        assert p1.read_bytes() == p2.read_bytes()
        for f in sorted((tmp_path / "one").iterdir()):
            twin = tmp_path / "two" / f.name
            assert f.read_bytes() == twin.read_bytes()

    def test_filenames_embed_origin(self):
        assert patch_filename("s01", (180, 744), "high") == "s01_c0180_r0744_high.pgm"

    def test_duplicate_ids_rejected(self, tmp_path):
        pairs = [("a", make_pair(seed=1)), ("a", make_pair(seed=2))]
        with pytest.raises(DataError, match="duplicate"):
            export_for_training(pairs, split_folds(2, 2, seed=0), tmp_path)

    def test_fold_count_mismatch_rejected(self, tmp_path):
        pairs = [("a", make_pair(seed=1))]
        with pytest.raises(DataError):
            export_for_training(pairs, split_folds(2, 2, seed=0), tmp_path)

    def test_manifest_validation(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_manifest(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(DataError, match="JSON"):
            load_manifest(bad)
        wrong = tmp_path / "wrong.json"
        wrong.write_text(json.dumps({"format": "other/1"}))
        with pytest.raises(DataError, match="format"):
            load_manifest(wrong)
        partial = tmp_path / "partial.json"
        partial.write_text(json.dumps({"format": "dataset-manifest/1"}))
        with pytest.raises(DataError, match="missing fields"):
            load_manifest(partial)

    def test_read_entry_patch_shape_check(self, tmp_path):
        pairs = [("a", make_pair(seed=1))]
        manifest_path = export_for_training(
            pairs, split_folds(1, 1, seed=0), tmp_path
        )
        doc = load_manifest(manifest_path)
        entry = doc["entries"][0]
        doc["patch_size"] = 128  # lie about the size
        with pytest.raises(DataError, match="mismatch"):
            read_entry_patches(doc, tmp_path, entry, "low")
        with pytest.raises(ConfigError):
            read_entry_patches(doc, tmp_path, entry, "mid")
