"""End-to-end run against the simulator toolkit.

Builds a small real dataset by calling the `sonopair` CLI, trains the
pix2pix-style model on sixteen pairs, and holds out four. Absolute scores
depend on the synthetic scene statistics and are deliberately not pinned;
what must hold is the ordering (a trained model beats feeding the
low-frequency image through unchanged) and the file-format contract
(generated patches rebuild into full-size frames the toolkit accepts).

Simulation dominates the runtime of this module (about two minutes for
twenty frame pairs); training itself takes seconds.
"""

import json
import shutil
import subprocess
import time

import numpy as np
import pytest

from sonotrain.generate import generate
from sonotrain.patches import load_manifest, manifest_pairs, read_pgm, split_records
from sonotrain.train import TrainConfig, load_checkpoint, pair_rmse, train

SIM = shutil.which("sonopair")
pytestmark = pytest.mark.skipif(SIM is None, reason="simulator CLI not on PATH")

PAIR_COUNT = 20
HELD_OUT_FOLD = 0


def run_cli(*args):
    proc = subprocess.run([SIM, *args], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


@pytest.fixture(scope="module")
def sim_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    pairs = root / "pairs"
    for seed in range(PAIR_COUNT):
        run_cli(
            "simulate", "--out", str(pairs / f"s{seed:02d}"),
            "--seed", str(seed), "--phantom", "contrast", "--no-rf",
        )
    reply = json.loads(run_cli(
        "export", "--pairs-dir", str(pairs), "--out", str(root / "ds"),
        "--folds", "5", "--seed", "0",
    ))
    assert reply["fold_counts"] == [4, 4, 4, 4, 4]
    return root / "ds"


@pytest.fixture(scope="module")
def trained(sim_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("sim_run")
    config = TrainConfig(model="pix2pix_like", epochs=6, seed=0)
    started = time.monotonic()
    path = train(sim_dataset / "manifest.json", sim_dataset, out, config,
                 test_folds=(HELD_OUT_FOLD,))
    return path, time.monotonic() - started


def test_trained_model_beats_identity_on_every_held_out_pair(
        sim_dataset, trained):
    checkpoint, wall = trained
    print(f"training took {wall:.0f}s")
    assert wall < 7200
    doc = load_manifest(sim_dataset / "manifest.json")
    train_recs, test_recs = split_records(
        manifest_pairs(doc, sim_dataset), 5, (HELD_OUT_FOLD,)
    )
    assert len(train_recs) == 16
    assert len(test_recs) == 4
    _, _, generator, _ = load_checkpoint(checkpoint)
    scores = pair_rmse(generator, test_recs, patch_size=doc["patch_size"])
    for rid in sorted(scores):
        s = scores[rid]
        print(f"{rid}: generated {s['generated']:.2f} "
              f"identity {s['identity']:.2f}")
        assert s["generated"] < s["identity"]


def test_generated_patches_rebuild_full_frames(sim_dataset, trained, tmp_path):
    checkpoint, _ = trained
    doc = json.loads((sim_dataset / "manifest.json").read_text())
    doc["entries"] = [e for e in doc["entries"] if e["fold"] == HELD_OUT_FOLD]
    sub = tmp_path / "held_out.json"
    sub.write_text(json.dumps(doc, indent=1, sort_keys=True))

    written = generate(checkpoint, sub, sim_dataset, tmp_path / "gen")
    assert len(written) == 4 * 8  # eight patches per frame

    run_cli(
        "reconstruct", "--manifest", str(sub),
        "--patches-dir", str(tmp_path / "gen"), "--frequency", "high",
        "--out", str(tmp_path / "rec"),
    )
    first_id = doc["entries"][0]["id"]
    image = read_pgm(tmp_path / "rec" / f"{first_id}_high.pgm")
    assert image.shape == (1000, 436)
    assert np.ptp(image) > 20  # actual image content, not a flat fill
