"""Seeded minibatch training for the two-stream recovery network."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import torch

from ..pipeline import standardize_batch
from .losses import LossParts, loss_kl, loss_reconstruction, loss_total, loss_wasserstein
from .network import TwoStreamRecoveryNet


class TrainingDiverged(RuntimeError):
    """Raised when the loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 3.0
    eta: float = 2e-4
    batch_size: int = 64
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 50
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1 (regularizers must outweigh "
                             "reconstruction for the latents to disentangle)")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0 or self.momentum < 0:
            raise ValueError("learning_rate and momentum must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class EpochLoss:
    epoch: int
    reconstruction: float
    i_regularizer: float
    q_regularizer: float
    alignment: float
    total: float

    def as_row(self) -> List[float]:
        return [
            self.epoch,
            self.reconstruction,
            self.i_regularizer,
            self.q_regularizer,
            self.alignment,
            self.total,
        ]


@dataclass
class LossHistory:
    epochs: List[EpochLoss] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)

    def __iter__(self):
        return iter(self.epochs)

    def totals(self) -> List[float]:
        return [e.total for e in self.epochs]


def normalize_truth(truth: np.ndarray) -> np.ndarray:
    """Per-window zero mean, unit variance; all-flat windows become zeros."""
    truth = np.asarray(truth, dtype=np.float32)
    centered = truth - truth.mean()
    std = centered.std()
    if std < 1e-8:
        return np.zeros_like(centered)
    return centered / std


def stack_windows(pairs: Sequence[Tuple["SlowTimeWindow", np.ndarray]]):
    """Stack (window, truth) pairs into training arrays.

    Returns float32 arrays (i, q, truth) of shapes (N, C, L), (N, C, L),
    (N, L); windows are standardized (offset removed, joint rms scale),
    ground truth is normalized per window.
    """
    i_arr = np.stack([p[0].i_channels for p in pairs]).astype(np.float32)
    q_arr = np.stack([p[0].q_channels for p in pairs]).astype(np.float32)
    i_arr, q_arr = standardize_batch(i_arr, q_arr)
    t_arr = np.stack([normalize_truth(p[1]) for p in pairs])
    return i_arr, q_arr, t_arr


def train(
    data: Tuple[np.ndarray, np.ndarray, np.ndarray],
    net: TwoStreamRecoveryNet,
    cfg: TrainConfig = TrainConfig(),
) -> LossHistory:
    """Minibatch SGD with momentum on the total objective.

    ``data`` is the (i, q, truth) triple from stack_windows. The net is
    updated in place; the per-epoch mean of every loss component is
    returned. Shuffling and latent noise come from one torch.Generator
    seeded by cfg.rng_seed, so identical seeds give identical histories.
    Raises TrainingDiverged as soon as any loss stops being finite.
    """
    i_arr, q_arr, t_arr = data
    if not (len(i_arr) == len(q_arr) == len(t_arr)):
        raise ValueError("i, q and truth arrays must have equal length")
    n = len(i_arr)
    if n == 0:
        raise ValueError("empty training set")

    x_i = torch.as_tensor(np.ascontiguousarray(i_arr), dtype=torch.float32)
    x_q = torch.as_tensor(np.ascontiguousarray(q_arr), dtype=torch.float32)
    t = torch.as_tensor(np.ascontiguousarray(t_arr), dtype=torch.float32)

    gen = torch.Generator().manual_seed(int(cfg.rng_seed))
    opt = torch.optim.SGD(net.parameters(), lr=cfg.learning_rate, momentum=cfg.momentum)
    latent_dim = net.cfg.latent_dim

    history = LossHistory()
    net.train()
    for epoch in range(cfg.epochs):
        perm = torch.randperm(n, generator=gen)
        sums = np.zeros(5)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            b = len(idx)
            noise_i = torch.randn(b, latent_dim, generator=gen)
            noise_q = torch.randn(b, latent_dim, generator=gen)

            out, g_i, g_q = net(x_i[idx], x_q[idx], noise_i, noise_q)
            parts = LossParts(
                reconstruction=loss_reconstruction(out, t[idx]),
                i_regularizer=loss_kl(g_i),
                q_regularizer=loss_kl(g_q),
                alignment=loss_wasserstein(g_i, g_q),
            )
            total = loss_total(parts, cfg.gamma, cfg.eta)
            if not torch.isfinite(total):
                rc, ir, qr, da = (float(p.detach()) for p in parts)
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {start // cfg.batch_size}: "
                    f"rc={rc:.4g} ir={ir:.4g} qr={qr:.4g} da={da:.4g}"
                )

            opt.zero_grad()
            total.backward()
            opt.step()

            sums += b * np.array(
                [float(p.detach()) for p in parts] + [float(total.detach())]
            )
        means = sums / n
        history.epochs.append(EpochLoss(epoch, *(float(v) for v in means)))
    return history
