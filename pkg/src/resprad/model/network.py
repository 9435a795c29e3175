"""Two-stream variational encoder-decoder.

Each stream (I channels, Q channels) runs through its own convolutional
encoder to a diagonal-Gaussian latent; the decoder maps a single latent
vector back to the waveform. During training the two latents are
sampled independently and summed before decoding; at inference the two
means are summed (see inference.infer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from .losses import LatentGaussian


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture hyperparameters.

    The defaults reproduce the published five-stage architecture
    (channels 32..512 / 512..32, kernel 3, stride 1, padding 1, scale
    factor 2, latent 64). Other depths are accepted as long as encoder
    and decoder agree; the unit tests rely on small two-stage variants.
    """

    input_channels: int = 17
    frames: int = 1000
    encoder_channels: Tuple[int, ...] = (32, 64, 128, 256, 512)
    decoder_channels: Tuple[int, ...] = (512, 256, 128, 64, 32)
    latent_dim: int = 64
    kernel_size: int = 3
    stride: int = 1
    padding: int = 1
    scale_factor: int = 2
    leaky_relu_slope: float = 0.01

    def __post_init__(self) -> None:
        object.__setattr__(self, "encoder_channels", tuple(self.encoder_channels))
        object.__setattr__(self, "decoder_channels", tuple(self.decoder_channels))
        if len(self.encoder_channels) != len(self.decoder_channels):
            raise ValueError("encoder and decoder must have the same stage count")
        if len(self.encoder_channels) < 1:
            raise ValueError("at least one stage required")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if self.input_channels < 1 or self.frames < 1:
            raise ValueError("input_channels and frames must be >= 1")
        if self.scale_factor < 2:
            raise ValueError("scale_factor must be >= 2")

    @property
    def n_stages(self) -> int:
        return len(self.encoder_channels)

    @property
    def total_downsample(self) -> int:
        return self.scale_factor**self.n_stages

    @property
    def padded_frames(self) -> int:
        """frames zero-padded up to the next multiple of the ladder."""
        d = self.total_downsample
        return ((self.frames + d - 1) // d) * d

    @property
    def feature_frames(self) -> int:
        return self.padded_frames // self.total_downsample


class StreamEncoder(nn.Module):
    """Conv stages -> flatten -> affine heads for mean and log-variance."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        stages = []
        in_ch = cfg.input_channels
        for out_ch in cfg.encoder_channels:
            stages.append(
                nn.Sequential(
                    nn.Conv1d(
                        in_ch,
                        out_ch,
                        kernel_size=cfg.kernel_size,
                        stride=cfg.stride,
                        padding=cfg.padding,
                    ),
                    nn.BatchNorm1d(out_ch),
                    nn.LeakyReLU(cfg.leaky_relu_slope),
                    nn.MaxPool1d(cfg.scale_factor),
                )
            )
            in_ch = out_ch
        self.stages = nn.Sequential(*stages)
        flat = cfg.encoder_channels[-1] * cfg.feature_frames
        self.fc_mu = nn.Linear(flat, cfg.latent_dim)
        self.fc_logvar = nn.Linear(flat, cfg.latent_dim)

    def forward(self, x: torch.Tensor) -> LatentGaussian:
        if x.shape[-2] != self.cfg.input_channels or x.shape[-1] != self.cfg.padded_frames:
            raise ValueError(
                f"encoder expects {self.cfg.input_channels} x "
                f"{self.cfg.padded_frames} input, got {tuple(x.shape[-2:])}"
            )
        h = self.stages(x)
        h = h.flatten(start_dim=1)
        return LatentGaussian(self.fc_mu(h), self.fc_logvar(h))


class WaveformDecoder(nn.Module):
    """Affine map -> (deconv, x2 upsample, norm, leaky) stages -> 1 channel."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        self.fc = nn.Linear(cfg.latent_dim, cfg.decoder_channels[0] * cfg.feature_frames)
        stages = []
        in_ch = cfg.decoder_channels[0]
        for out_ch in cfg.decoder_channels:
            stages.append(
                nn.Sequential(
                    nn.ConvTranspose1d(
                        in_ch,
                        out_ch,
                        kernel_size=cfg.kernel_size,
                        stride=cfg.stride,
                        padding=cfg.padding,
                    ),
                    nn.Upsample(scale_factor=cfg.scale_factor, mode="nearest"),
                    nn.BatchNorm1d(out_ch),
                    nn.LeakyReLU(cfg.leaky_relu_slope),
                )
            )
            in_ch = out_ch
        self.stages = nn.Sequential(*stages)
        self.head = nn.Conv1d(
            cfg.decoder_channels[-1], 1, kernel_size=cfg.kernel_size, padding=cfg.padding
        )

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.shape[-1] != self.cfg.latent_dim:
            raise ValueError(f"latent must have {self.cfg.latent_dim} entries")
        h = self.fc(z)
        h = h.view(z.shape[0], self.cfg.decoder_channels[0], self.cfg.feature_frames)
        h = self.stages(h)
        return self.head(h)  # (B, 1, padded_frames)


class TwoStreamRecoveryNet(nn.Module):
    """The full recovery network: I encoder + Q encoder + shared decoder."""

    def __init__(self, cfg: NetworkConfig, init_seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.encoder_i = StreamEncoder(cfg)
        self.encoder_q = StreamEncoder(cfg)
        self.decoder = WaveformDecoder(cfg)
        init_xavier_uniform(self, init_seed)

    def pad_frames(self, x: torch.Tensor) -> torch.Tensor:
        """Zero-pad the slow-time axis up to the ladder multiple."""
        short = self.cfg.padded_frames - x.shape[-1]
        if short < 0:
            raise ValueError(
                f"window has {x.shape[-1]} frames, network built for "
                f"{self.cfg.frames}"
            )
        return F.pad(x, (0, short)) if short else x

    def encode_i(self, x: torch.Tensor) -> LatentGaussian:
        return self.encoder_i(self.pad_frames(x))

    def encode_q(self, x: torch.Tensor) -> LatentGaussian:
        return self.encoder_q(self.pad_frames(x))

    def decode(self, z: torch.Tensor, out_len: int | None = None) -> torch.Tensor:
        """Decode latent vectors to waveforms, cropped to out_len frames."""
        squeeze = z.ndim == 1
        if squeeze:
            z = z[None]
        w = self.decoder(z)[:, 0, :]
        if out_len is None:
            out_len = self.cfg.frames
        w = w[:, :out_len]
        return w[0] if squeeze else w

    def forward(self, x_i, x_q, noise_i, noise_q):
        """Training path: sample both streams, sum, decode.

        Returns (waveform batch, I latent, Q latent).
        """
        from .losses import sample_latent

        g_i = self.encode_i(x_i)
        g_q = self.encode_q(x_q)
        z = sample_latent(g_i, noise_i) + sample_latent(g_q, noise_q)
        return self.decode(z, out_len=x_i.shape[-1]), g_i, g_q


def init_xavier_uniform(net: nn.Module, seed: int) -> None:
    """Xavier-uniform weights from an explicit generator; zero biases.

    Uses a local torch.Generator so identical seeds give bit-identical
    parameters regardless of global RNG state.
    """
    gen = torch.Generator().manual_seed(int(seed))
    with torch.no_grad():
        for m in net.modules():
            if isinstance(m, (nn.Conv1d, nn.ConvTranspose1d, nn.Linear)):
                w = m.weight
                receptive = 1
                for s in w.shape[2:]:
                    receptive *= s
                fan_in = w.shape[1] * receptive
                fan_out = w.shape[0] * receptive
                bound = math.sqrt(6.0 / (fan_in + fan_out))
                w.uniform_(-bound, bound, generator=gen)
                if m.bias is not None:
                    m.bias.zero_()
            elif isinstance(m, nn.BatchNorm1d):
                m.reset_parameters()
                m.reset_running_stats()
