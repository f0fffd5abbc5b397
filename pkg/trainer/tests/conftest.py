import json

import numpy as np
import pytest

from sonotrain.patches import write_pgm
from sonotrain.train import TrainConfig, train

PAIR_COUNT = 20
PATCH = 64
FOLDS = 5


def smooth_field(rng, size):
    # Sum of a few low-frequency sinusoids; convnets pick these up in a
    # couple hundred steps, which keeps the training tests fast.
    yy, xx = np.mgrid[0:size, 0:size] / size
    img = np.zeros((size, size))
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.5, 2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        img += rng.uniform(0.4, 1.0) * np.sin(
            2.0 * np.pi * (fx * xx + fy * yy) + phase
        )
    img = (img - img.min()) / (np.ptp(img) + 1e-12)
    return np.round(20 + 215 * img).astype(np.uint8)


@pytest.fixture(scope="session")
def desk_config():
    """Factory for a small config that trains in seconds."""

    def make(**overrides):
        base = dict(
            model="pix2pix_like", epochs=40, crop=PATCH, base_width=8,
            unet_depth=3, batch_size=4, seed=0,
        )
        base.update(overrides)
        return TrainConfig(**base)

    return make


@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    """Twenty 64x64 pairs where the high image is the negative of the low.

    The mapping is pixelwise and deterministic, so short runs learn it well
    enough for every ordering assertion in the suite. A second manifest
    restricted to fold 0 stands in for "new pairs" in fine-tuning tests.
    """
    root = tmp_path_factory.mktemp("desk")
    rng = np.random.default_rng(7)
    entries = []
    for i in range(PAIR_COUNT):
        low = smooth_field(rng, PATCH)
        high = (255 - low).astype(np.uint8)
        low_name = f"p{i:02d}_c0000_r0000_low.pgm"
        high_name = f"p{i:02d}_c0000_r0000_high.pgm"
        write_pgm(root / low_name, low)
        write_pgm(root / high_name, high)
        entries.append({
            "id": f"p{i:02d}", "fold": i % FOLDS, "origins": [[0, 0]],
            "low": [low_name], "high": [high_name],
        })
    doc = {
        "format": "dataset-manifest/1", "patch_size": PATCH,
        "stride_cols": PATCH, "stride_rows": PATCH,
        "source_cols": PATCH, "source_rows": PATCH,
        "fold_count": FOLDS, "fold_seed": 0, "entries": entries,
    }
    (root / "manifest.json").write_text(json.dumps(doc, indent=1, sort_keys=True))
    sub = dict(doc)
    sub["entries"] = [e for e in entries if e["fold"] == 0]
    (root / "manifest_fold0.json").write_text(
        json.dumps(sub, indent=1, sort_keys=True)
    )
    return root


@pytest.fixture(scope="session")
def desk_checkpoint(desk_dataset, desk_config, tmp_path_factory):
    """One full desk training run, shared by everything that needs a model."""
    out = tmp_path_factory.mktemp("desk_run")
    return train(
        desk_dataset / "manifest.json", desk_dataset, out, desk_config(),
        test_folds=(0,),
    )
