"""Generator and critic architectures.

The full-size generator (volume 128, channel_scale 1) is a latent
projection into a 256x8x8x8 tensor followed by transposed-convolution
upsampling stages (kernel 4, stride 2, padding 1) down the channel ladder
256 -> 128 -> 64 -> 32 -> 1, batch norm and LeakyReLU 0.2 between stages,
Tanh at the end: 5,769,889 parameters. The critic stacks three
conv/instance-norm/max-pool blocks (1 -> 4 -> 16 -> 64, kernel 3), strided
convolutions at constant width down to 2^3, and a final convolution to one
score: 820,841 parameters at full size.

Smaller volumes drop upsampling stages (one per halving); channel_scale
divides every width, so toy configurations train on a CPU in minutes.
"""

from __future__ import annotations

import math

import torch
from torch import nn

FULL_GENERATOR_CHANNELS = (256, 128, 64, 32)
FULL_CRITIC_CHANNELS = (4, 16, 64)
LEAKY_SLOPE = 0.2
BN_EPS = 1.0e-5
INIT_SIZE = 8
LATENT_DIM = 20


def _stage_count(volume_size: int) -> int:
    stages = int(math.log2(volume_size / INIT_SIZE))
    if INIT_SIZE * 2 ** stages != volume_size or stages < 1:
        raise ValueError(f"volume_size must be {INIT_SIZE} * 2^k >= 16, got {volume_size}")
    return stages


class Generator(nn.Module):
    """Latent vector to single-channel volume in [-1, 1]."""

    def __init__(self, volume_size: int = 128, channel_scale: int = 1,
                 latent_dim: int = LATENT_DIM):
        super().__init__()
        if channel_scale not in (1, 2, 4, 8):
            raise ValueError("channel_scale must be one of {1, 2, 4, 8}")
        n_up = _stage_count(volume_size)  # transposed convolutions, incl. final
        widths = [max(1, c // channel_scale) for c in FULL_GENERATOR_CHANNELS[:n_up]]
        self.latent_dim = latent_dim
        self.volume_size = volume_size
        self.init_channels = widths[0]
        self.stage_channels = tuple(widths[1:])

        feature_dim = self.init_channels * INIT_SIZE ** 3
        self.latent_proj = nn.Linear(latent_dim, feature_dim)
        self.latent_bn = nn.BatchNorm1d(feature_dim, eps=BN_EPS)
        ups = []
        bns = []
        chain = (self.init_channels, *self.stage_channels)
        for cin, cout in zip(chain[:-1], chain[1:]):
            ups.append(nn.ConvTranspose3d(cin, cout, 4, stride=2, padding=1))
            bns.append(nn.BatchNorm3d(cout, eps=BN_EPS))
        self.ups = nn.ModuleList(ups)
        self.bns = nn.ModuleList(bns)
        self.to_voxels = nn.ConvTranspose3d(chain[-1], 1, 4, stride=2, padding=1)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        x = self.act(self.latent_bn(self.latent_proj(z)))
        x = x.view(-1, self.init_channels, INIT_SIZE, INIT_SIZE, INIT_SIZE)
        for up, bn in zip(self.ups, self.bns):
            x = self.act(bn(up(x)))
        return torch.tanh(self.to_voxels(x))

    def spec_dict(self) -> dict:
        """Architecture description consumed by the inference engine."""
        return {
            "latent_dim": self.latent_dim,
            "init_channels": self.init_channels,
            "init_size": INIT_SIZE,
            "stage_channels": list(self.stage_channels),
            "out_channels": 1,
            "kernel": 4,
            "stride": 2,
            "padding": 1,
            "leaky_slope": LEAKY_SLOPE,
            "bn_eps": BN_EPS,
        }


class Discriminator(nn.Module):
    """Volume to unbounded critic score."""

    def __init__(self, volume_size: int = 128, channel_scale: int = 1):
        super().__init__()
        if channel_scale not in (1, 2, 4, 8):
            raise ValueError("channel_scale must be one of {1, 2, 4, 8}")
        widths = [max(1, c // channel_scale) for c in FULL_CRITIC_CHANNELS]
        blocks = []
        cin = 1
        for cout in widths:
            blocks += [
                nn.Conv3d(cin, cout, 3, padding=1),
                nn.InstanceNorm3d(cout, affine=True),
                nn.LeakyReLU(LEAKY_SLOPE),
                nn.MaxPool3d(2),
            ]
            cin = cout
        # spatial size is volume/8 here; stride down to 2^3, then score
        size = volume_size // 8
        if size < 2:
            raise ValueError(f"volume_size {volume_size} too small for the critic")
        while size > 2:
            blocks += [
                nn.Conv3d(cin, cin, 4, stride=2, padding=1),
                nn.InstanceNorm3d(cin, affine=True),
                nn.LeakyReLU(LEAKY_SLOPE),
            ]
            size //= 2
        self.features = nn.Sequential(*blocks)
        self.score = nn.Conv3d(cin, 1, 4, stride=2, padding=1)

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        return self.score(self.features(y)).flatten(1)


def parameter_count(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
