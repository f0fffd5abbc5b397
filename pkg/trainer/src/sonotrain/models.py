"""Generator and discriminator architectures.

Two generator families map a low-frequency patch to a synthetic
high-frequency patch at the same size:

- UNetGenerator: encoder/decoder with skip connections, for the
  pix2pix-style variant.
- ResidualGenerator: a plain residual stack that runs at the input
  resolution end to end. It contains no upsampling of any kind (no
  transposed convolutions, no pixel shuffling, no interpolation), which is
  the point of the variant: a same-size translation task has nothing to
  upsample.

The discriminator is a patch-level convolutional classifier; its output is
a spatial map of logits, one per receptive field, never a single
fully-connected score.
"""

import torch
from torch import nn

from .patches import ConfigError

MODEL_KINDS = ("pix2pix_like", "srganus")

# Adversarial criterion per variant; both keep the L1 content term.
LOSS_TERMS = {
    "pix2pix_like": ("adv_bce", "l1"),
    "srganus": ("adv_mse", "l1"),
}

# Modules that change spatial resolution upward; the srganus generator
# must contain none of these.
UPSAMPLING_KINDS = (nn.Upsample, nn.ConvTranspose2d, nn.PixelShuffle)


def _down(c_in, c_out, normalize=True):
    layers = [nn.Conv2d(c_in, c_out, 4, stride=2, padding=1, bias=not normalize)]
    if normalize:
        layers.append(nn.BatchNorm2d(c_out))
    layers.append(nn.LeakyReLU(0.2, inplace=True))
    return nn.Sequential(*layers)


def _up(c_in, c_out):
    return nn.Sequential(
        nn.ConvTranspose2d(c_in, c_out, 4, stride=2, padding=1, bias=False),
        nn.BatchNorm2d(c_out),
        nn.ReLU(inplace=True),
    )


class UNetGenerator(nn.Module):
    """Skip-connected encoder/decoder; input size must divide by 2**depth."""

    def __init__(self, base=16, depth=4):
        super().__init__()
        if depth < 2:
            raise ConfigError("unet depth must be at least 2")
        self.depth = depth
        widths = [min(base * 2**i, base * 8) for i in range(depth)]
        downs, c = [], 1
        for i, w in enumerate(widths):
            downs.append(_down(c, w, normalize=i > 0))
            c = w
        self.downs = nn.ModuleList(downs)
        ups = []
        for i in reversed(range(depth - 1)):
            ups.append(_up(c, widths[i]))
            c = widths[i] * 2  # concatenated skip
        self.ups = nn.ModuleList(ups)
        self.head = nn.Sequential(
            nn.ConvTranspose2d(c, base, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(base, 1, 3, padding=1),
            nn.Tanh(),
        )

    def forward(self, x):
        step = 2**self.depth
        if x.shape[-2] % step or x.shape[-1] % step:
            raise ConfigError(
                f"input size {tuple(x.shape[-2:])} not divisible by {step}"
            )
        skips = []
        for down in self.downs:
            x = down(x)
            skips.append(x)
        skips.pop()  # bottleneck is not its own skip
        for up in self.ups:
            x = up(x)
            x = torch.cat([x, skips.pop()], dim=1)
        return self.head(x)


class ResidualBlock(nn.Module):
    def __init__(self, width):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(width, width, 3, padding=1, bias=False),
            nn.BatchNorm2d(width),
            nn.PReLU(),
            nn.Conv2d(width, width, 3, padding=1, bias=False),
            nn.BatchNorm2d(width),
        )

    def forward(self, x):
        return x + self.body(x)


class ResidualGenerator(nn.Module):
    """Same-resolution residual stack; stride 1 everywhere."""

    def __init__(self, base=16, blocks=6):
        super().__init__()
        if blocks < 1:
            raise ConfigError("residual generator needs at least 1 block")
        self.entry = nn.Sequential(nn.Conv2d(1, base, 3, padding=1), nn.PReLU())
        self.blocks = nn.Sequential(*[ResidualBlock(base) for _ in range(blocks)])
        self.fuse = nn.Sequential(
            nn.Conv2d(base, base, 3, padding=1, bias=False), nn.BatchNorm2d(base)
        )
        self.exit = nn.Sequential(nn.Conv2d(base, 1, 3, padding=1), nn.Tanh())

    def forward(self, x):
        feat = self.entry(x)
        out = feat + self.fuse(self.blocks(feat))
        return self.exit(out)


class PatchDiscriminator(nn.Module):
    """Conditional patch classifier: (low, candidate high) -> logit map."""

    def __init__(self, base=16):
        super().__init__()
        self.net = nn.Sequential(
            _down(2, base, normalize=False),
            _down(base, base * 2),
            _down(base * 2, base * 4),
            nn.Conv2d(base * 4, 1, 3, padding=1),
        )

    def forward(self, low, candidate):
        return self.net(torch.cat([low, candidate], dim=1))


def build_models(config):
    """Seeded construction of (generator, discriminator) for a config."""
    if config.model not in MODEL_KINDS:
        raise ConfigError(f"model must be one of {MODEL_KINDS}")
    torch.manual_seed(config.seed)
    if config.model == "pix2pix_like":
        gen = UNetGenerator(base=config.base_width, depth=config.unet_depth)
    else:
        gen = ResidualGenerator(base=config.base_width, blocks=config.blocks)
    disc = PatchDiscriminator(base=config.base_width)
    return gen, disc


def contains_upsampling(module):
    return any(isinstance(m, UPSAMPLING_KINDS) for m in module.modules())
