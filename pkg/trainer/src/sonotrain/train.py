"""Training loop, checkpoints, and the line-delimited training log.

One process, alternating discriminator/generator steps over shuffled
patch batches. Checkpoints are written atomically (write to a temp file,
then rename), and every step and epoch appends one JSON record to the
log, so a crashed or interrupted run leaves a readable trail and no
half-written checkpoint.
"""

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .models import LOSS_TERMS, MODEL_KINDS, build_models
from .patches import (
    ConfigError,
    DataError,
    load_manifest,
    load_patch_arrays,
    manifest_pairs,
    split_records,
    to_bytes,
    to_unit,
)

CHECKPOINT_NAME = "checkpoint.pt"
LOG_NAME = "train.log"


@dataclass(frozen=True)
class TrainConfig:
    model: str = "pix2pix_like"
    epochs: int = 120
    lr: float = 1e-4
    lr_halve_every: int = 30
    fine_tune_lr: float = 1e-5
    batch_size: int = 4
    crop: int = 128
    base_width: int = 16
    unet_depth: int = 4
    blocks: int = 6
    l1_weight: float = 100.0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}")
        if self.lr <= 0 or self.fine_tune_lr <= 0:
            raise ConfigError("learning rates must be positive")
        # epochs 0 is the zero-epoch smoke run: checkpoint == initialization.
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.lr_halve_every < 1:
            raise ConfigError("lr_halve_every must be at least 1")
        if self.batch_size < 1 or self.crop < 1:
            raise ConfigError("batch_size and crop must be positive")
        if self.l1_weight < 0:
            raise ConfigError("l1_weight must be non-negative")


def lr_for_epoch(config, epoch):
    return config.lr * 0.5 ** (epoch // config.lr_halve_every)


def save_checkpoint(path, generator, discriminator, opt_g, opt_d, config, epoch):
    path = Path(path)
    payload = {
        "config": asdict(config),
        "epoch": epoch,
        "generator": generator.state_dict(),
        "discriminator": discriminator.state_dict(),
        "opt_g": opt_g.state_dict(),
        "opt_d": opt_d.state_dict(),
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path):
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except FileNotFoundError as e:
        raise DataError(f"checkpoint not found: {path}") from e
    try:
        config = TrainConfig(**{
            **payload["config"],
            "betas": tuple(payload["config"]["betas"]),
        })
    except (KeyError, TypeError) as e:
        raise DataError(f"{path}: not a trainer checkpoint: {e}") from e
    generator, discriminator = build_models(config)
    generator.load_state_dict(payload["generator"])
    discriminator.load_state_dict(payload["discriminator"])
    return payload, config, generator, discriminator


def _optimizers(config, generator, discriminator):
    make = lambda params: torch.optim.Adam(
        params, lr=config.lr, betas=config.betas, eps=config.eps
    )
    return make(generator.parameters()), make(discriminator.parameters())


class _Batcher:
    """Seeded shuffled batches of random same-position crops."""

    def __init__(self, pairs, config):
        self.pairs = pairs
        self.config = config
        self.rng = np.random.default_rng(config.seed)

    def epoch_batches(self):
        order = self.rng.permutation(len(self.pairs))
        bs = self.config.batch_size
        for start in range(0, len(order), bs):
            chunk = order[start : start + bs]
            lows, highs = [], []
            for i in chunk:
                low, high = self.pairs[i]
                low, high = self._crop(low, high)
                lows.append(to_unit(low))
                highs.append(to_unit(high))
            yield (
                torch.from_numpy(np.stack(lows)[:, None]),
                torch.from_numpy(np.stack(highs)[:, None]),
            )

    def _crop(self, low, high):
        c = self.config.crop
        rows, cols = low.shape
        if rows < c or cols < c:
            raise DataError(
                f"patch {low.shape} smaller than training crop {c}"
            )
        r = int(self.rng.integers(0, rows - c + 1))
        k = int(self.rng.integers(0, cols - c + 1))
        return low[r : r + c, k : k + c], high[r : r + c, k : k + c]


def _adversarial(kind):
    if kind == "adv_bce":
        return nn.BCEWithLogitsLoss()
    return nn.MSELoss()


def _train_loop(generator, discriminator, opt_g, opt_d, pairs, config,
                out_dir, start_epoch, epochs, fixed_lr=None, log_extra=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    adv_name, _ = LOSS_TERMS[config.model]
    adv_loss = _adversarial(adv_name)
    l1_loss = nn.L1Loss()
    generator.train()
    discriminator.train()
    batcher = _Batcher(pairs, config)
    step = 0
    with open(out / LOG_NAME, "w") as log:
        def emit(record):
            log.write(json.dumps(record, sort_keys=True) + "\n")

        emit({
            "event": "start",
            "config": asdict(config),
            "pairs": len(pairs),
            "loss_terms": list(LOSS_TERMS[config.model]),
            **(log_extra or {}),
        })
        for epoch in range(start_epoch, start_epoch + epochs):
            lr = fixed_lr if fixed_lr is not None else lr_for_epoch(config, epoch)
            for opt in (opt_g, opt_d):
                for group in opt.param_groups:
                    group["lr"] = lr
            sums = {"loss_g": 0.0, "loss_d": 0.0, "adv": 0.0, "l1": 0.0}
            count = 0
            for low, high in batcher.epoch_batches():
                fake = generator(low)

                opt_d.zero_grad()
                d_real = discriminator(low, high)
                d_fake = discriminator(low, fake.detach())
                loss_d = 0.5 * (
                    adv_loss(d_real, torch.ones_like(d_real))
                    + adv_loss(d_fake, torch.zeros_like(d_fake))
                )
                loss_d.backward()
                opt_d.step()

                opt_g.zero_grad()
                d_out = discriminator(low, fake)
                adv = adv_loss(d_out, torch.ones_like(d_out))
                content = l1_loss(fake, high)
                loss_g = adv + config.l1_weight * content
                loss_g.backward()
                opt_g.step()

                step += 1
                count += 1
                values = {
                    "loss_g": loss_g.detach().item(),
                    "loss_d": loss_d.detach().item(),
                    "adv": adv.detach().item(),
                    "l1": content.detach().item(),
                }
                for k, v in values.items():
                    sums[k] += v
                emit({"event": "step", "step": step, "epoch": epoch,
                      "lr": lr, **values})
            emit({
                "event": "epoch",
                "epoch": epoch,
                "lr": lr,
                **{k: v / max(count, 1) for k, v in sums.items()},
            })
    path = out / CHECKPOINT_NAME
    save_checkpoint(path, generator, discriminator, opt_g, opt_d, config,
                    start_epoch + epochs)
    return path


def train(manifest_path, patches_dir, out_dir, config,
          test_folds=(), train_folds=None):
    """Train from scratch; returns the checkpoint path."""
    doc = load_manifest(manifest_path)
    records = manifest_pairs(doc, patches_dir)
    train_recs, _ = split_records(
        records, int(doc["fold_count"]), test_folds, train_folds
    )
    pairs = load_patch_arrays(train_recs, expected_size=doc["patch_size"])
    generator, discriminator = build_models(config)
    opt_g, opt_d = _optimizers(config, generator, discriminator)
    return _train_loop(
        generator, discriminator, opt_g, opt_d, pairs, config, out_dir,
        start_epoch=0, epochs=config.epochs,
        log_extra={"mode": "train", "train_pairs": len(train_recs)},
    )


def fine_tune(checkpoint_path, manifest_path, patches_dir, out_dir, epochs):
    """Resume a checkpoint on new data at the fixed fine-tuning rate."""
    if epochs < 0:
        raise ConfigError("epochs must be non-negative")
    payload, config, generator, discriminator = load_checkpoint(checkpoint_path)
    opt_g, opt_d = _optimizers(config, generator, discriminator)
    opt_g.load_state_dict(payload["opt_g"])
    opt_d.load_state_dict(payload["opt_d"])
    doc = load_manifest(manifest_path)
    records = manifest_pairs(doc, patches_dir)
    pairs = load_patch_arrays(records, expected_size=doc["patch_size"])
    return _train_loop(
        generator, discriminator, opt_g, opt_d, pairs, config, out_dir,
        start_epoch=int(payload["epoch"]), epochs=epochs,
        fixed_lr=config.fine_tune_lr,
        log_extra={"mode": "fine_tune", "lr": config.fine_tune_lr},
    )


def rmse(a, b):
    d = a.astype(np.float64) - b.astype(np.float64)
    return math.sqrt(float(np.mean(d * d)))


def pair_rmse(generator, records, patch_size=None):
    """Per-pair generated-vs-high and identity low-vs-high RMSE."""
    generator.eval()
    out = {}
    with torch.no_grad():
        for rec in records:
            gen_sq, id_sq, n = 0.0, 0.0, 0
            for low, high in load_patch_arrays([rec], expected_size=patch_size):
                x = torch.from_numpy(to_unit(low)[None, None])
                made = to_bytes(generator(x).numpy()[0, 0])
                d = made.astype(np.float64) - high.astype(np.float64)
                e = low.astype(np.float64) - high.astype(np.float64)
                gen_sq += float(np.sum(d * d))
                id_sq += float(np.sum(e * e))
                n += d.size
            out[rec.id] = {
                "generated": math.sqrt(gen_sq / n),
                "identity": math.sqrt(id_sq / n),
            }
    return out
