"""Generation: checkpoint + low-frequency patches -> synthetic high patches.

Outputs are written with the manifest's high-frequency filenames, so the
simulator toolkit's reconstruct and score commands consume them directly.
Generation is deterministic: eval mode, no sampling, fixed traversal order.
"""

from pathlib import Path

import numpy as np
import torch

from .patches import (
    DataError,
    load_manifest,
    manifest_pairs,
    read_pgm,
    to_bytes,
    to_unit,
    write_pgm,
)
from .train import load_checkpoint


def generate(checkpoint_path, manifest_path, patches_dir, out_dir, ids=None):
    """Write one generated patch per low input; returns written names."""
    _, config, generator, _ = load_checkpoint(checkpoint_path)
    generator.eval()
    doc = load_manifest(manifest_path)
    records = manifest_pairs(doc, patches_dir)
    if ids is not None:
        wanted = set(ids)
        unknown = wanted - {r.id for r in records}
        if unknown:
            raise DataError(f"ids not in manifest: {sorted(unknown)}")
        records = [r for r in records if r.id in wanted]
    size = int(doc["patch_size"])
    if config.model == "pix2pix_like" and size % 2**config.unet_depth:
        raise DataError(
            f"checkpoint incompatible with patch size {size}: "
            f"not divisible by {2 ** config.unet_depth}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with torch.no_grad():
        for rec in records:
            for low_path, high_path in zip(rec.low_files, rec.high_files):
                low = read_pgm(low_path)
                if low.shape != (size, size):
                    raise DataError(
                        f"{low_path.name}: shape {low.shape} does not match "
                        f"manifest patch_size {size}"
                    )
                x = torch.from_numpy(to_unit(low)[None, None])
                made = to_bytes(generator(x).numpy()[0, 0])
                write_pgm(out / high_path.name, made)
                written.append(high_path.name)
    return written
