"""Command line interface: train, fine-tune, generate."""

import functools
import json
import sys

import click

from .generate import generate as run_generate
from .patches import ConfigError, DataError
from .train import TrainConfig, fine_tune as run_fine_tune, train as run_train

EXIT_CONFIG = 2
EXIT_DATA = 3


def handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except DataError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


def _folds(text):
    if text is None or text == "":
        return None
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as e:
        raise ConfigError(f"fold list must be comma-separated integers: {text!r}") from e


@click.group()
def main():
    """Paired low-to-high frequency patch translation trainer."""


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--patches-dir", type=click.Path(), default=None,
              help="Patch file directory (defaults to the manifest dir).")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--model", type=click.Choice(["pix2pix_like", "srganus"]),
              default="pix2pix_like", show_default=True)
@click.option("--epochs", type=int, default=120, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--batch-size", type=int, default=4, show_default=True)
@click.option("--crop", type=int, default=128, show_default=True)
@click.option("--base-width", type=int, default=16, show_default=True)
@click.option("--l1-weight", type=float, default=100.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--test-folds", default="", help="Held-out folds, e.g. '0'.")
@click.option("--train-folds", default=None,
              help="Training folds (default: all folds not held out).")
@handle_errors
def train(manifest_path, patches_dir, out_dir, model, epochs, lr, batch_size,
          crop, base_width, l1_weight, seed, test_folds, train_folds):
    """Train a translation model on manifest patches."""
    from pathlib import Path

    config = TrainConfig(
        model=model, epochs=epochs, lr=lr, batch_size=batch_size, crop=crop,
        base_width=base_width, l1_weight=l1_weight, seed=seed,
    )
    patches = patches_dir or str(Path(manifest_path).parent)
    path = run_train(manifest_path, patches, out_dir, config,
                     test_folds=_folds(test_folds) or (),
                     train_folds=_folds(train_folds))
    click.echo(json.dumps({"checkpoint": str(path)}))


@main.command(name="fine-tune")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--patches-dir", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@handle_errors
def fine_tune(checkpoint_path, manifest_path, patches_dir, out_dir, epochs):
    """Resume a checkpoint on new pairs at the fine-tuning rate."""
    from pathlib import Path

    patches = patches_dir or str(Path(manifest_path).parent)
    path = run_fine_tune(checkpoint_path, manifest_path, patches, out_dir, epochs)
    click.echo(json.dumps({"checkpoint": str(path)}))


@main.command()
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--patches-dir", type=click.Path(), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--ids", default=None, help="Comma-separated entry ids (default: all).")
@handle_errors
def generate(checkpoint_path, manifest_path, patches_dir, out_dir, ids):
    """Generate synthetic high-frequency patches from low inputs."""
    from pathlib import Path

    patches = patches_dir or str(Path(manifest_path).parent)
    id_list = None if ids is None else [s for s in ids.split(",") if s]
    written = run_generate(checkpoint_path, manifest_path, patches, out_dir,
                           ids=id_list)
    click.echo(json.dumps({"out": out_dir, "patches": len(written)}))


if __name__ == "__main__":
    main()
