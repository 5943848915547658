"""1D-convolutional VAE that emits per-beam class logits.

Encoder: stride-2 Conv1d stages (each followed by BatchNorm and ReLU) down
to a flat feature vector, then linear heads for the Gaussian latent (mu,
logvar). Decoder mirrors the encoder lengths with upsample + Conv1d stages
and ends in a 1x1 conv onto the class channels at exactly n_beams positions.
Sampling z = mu + exp(logvar / 2) * zeta makes the segmentation stochastic;
zeta = 0 gives the deterministic mean prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

NUM_CLASSES = 10


@dataclass
class ModelConfig:
    input_variant: str = "ri"            # "ri" | "r" | "p"
    n_beams: int = 1081
    encoder_channels: tuple = (32, 64, 128)
    latent_dim: int = 256
    num_classes: int = NUM_CLASSES

    @property
    def in_channels(self) -> int:
        return 1 if self.input_variant == "r" else 2


def _stage_lengths(n_beams: int, n_stages: int) -> list[int]:
    lengths = [n_beams]
    for _ in range(n_stages):
        lengths.append((lengths[-1] + 1) // 2)
    return lengths


class BeamSegVae(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        chans = (config.in_channels,) + tuple(config.encoder_channels)
        self.lengths = _stage_lengths(config.n_beams, len(config.encoder_channels))

        enc = []
        for c_in, c_out in zip(chans[:-1], chans[1:]):
            enc += [nn.Conv1d(c_in, c_out, kernel_size=5, stride=2, padding=2),
                    nn.BatchNorm1d(c_out), nn.ReLU(inplace=True)]
        self.encoder = nn.Sequential(*enc)

        flat = chans[-1] * self.lengths[-1]
        self.fc_mu = nn.Linear(flat, config.latent_dim)
        self.fc_logvar = nn.Linear(flat, config.latent_dim)
        self.fc_up = nn.Linear(config.latent_dim, flat)

        dec_chans = tuple(reversed(config.encoder_channels))
        dec = []
        for i, c_in in enumerate(dec_chans):
            c_out = dec_chans[i + 1] if i + 1 < len(dec_chans) else dec_chans[-1]
            dec.append(nn.Sequential(
                nn.Conv1d(c_in, c_out, kernel_size=5, padding=2),
                nn.BatchNorm1d(c_out), nn.ReLU(inplace=True)))
        self.decoder_stages = nn.ModuleList(dec)
        self.head = nn.Conv1d(dec_chans[-1], config.num_classes, kernel_size=1)

    def encode(self, x: torch.Tensor):
        if x.dim() != 3 or x.shape[1] != self.config.in_channels \
                or x.shape[2] != self.config.n_beams:
            raise ValueError(
                f"expected input (B, {self.config.in_channels}, "
                f"{self.config.n_beams}), got {tuple(x.shape)}")
        h = self.encoder(x).flatten(1)
        return self.fc_mu(h), self.fc_logvar(h)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        h = self.fc_up(z).view(z.shape[0], self.config.encoder_channels[-1],
                               self.lengths[-1])
        for stage, length in zip(self.decoder_stages,
                                 reversed(self.lengths[:-1])):
            h = F.interpolate(h, size=length, mode="linear",
                              align_corners=False)
            h = stage(h)
        return self.head(h)

    def forward(self, x: torch.Tensor, zeta: torch.Tensor | None = None):
        """Returns (logits B x C x n_beams, mu, logvar).

        ``zeta`` is the standard-normal latent noise; None samples it fresh,
        a fixed tensor makes the forward pass deterministic.
        """
        mu, logvar = self.encode(x)
        if zeta is None:
            zeta = torch.randn_like(mu)
        if zeta.shape != mu.shape:
            raise ValueError(f"zeta shape {tuple(zeta.shape)} != latent "
                             f"{tuple(mu.shape)}")
        z = mu + torch.exp(0.5 * logvar) * zeta
        return self.decode(z), mu, logvar
