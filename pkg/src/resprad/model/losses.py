"""Latent distribution type and the training objective.

The total objective is

    L = L_RC + gamma * (L_IR + L_QR) + eta * L_DA

where L_RC is the summed squared reconstruction error, L_IR / L_QR are
the KL divergences of the two stream posteriors from the standard
normal, and L_DA is the squared 2-Wasserstein distance between the two
diagonal Gaussians (mean distance plus per-dimension std distance).

Every function below accepts plain arrays or torch tensors, works on a
single instance (shape (D,) / (L,)) or a batch (leading batch axis, in
which case the batch mean is returned), and is differentiable through
torch autograd.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import torch

LOG_VAR_CLAMP = 10.0  # |log-variance| bound before exponentiation


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


@dataclass(frozen=True)
class LatentGaussian:
    """Diagonal Gaussian over the latent space.

    Stored as mean and log-variance (the encoder's raw outputs); the
    positive std is derived, so the std > 0 invariant holds by
    construction. log_var is clamped to [-LOG_VAR_CLAMP, LOG_VAR_CLAMP]
    on access to keep exponentials finite.
    """

    mean: torch.Tensor
    log_var: torch.Tensor

    def __post_init__(self) -> None:
        mean = _as_tensor(self.mean)
        log_var = _as_tensor(self.log_var)
        if mean.shape != log_var.shape:
            raise ValueError("mean and log_var must share a shape")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "log_var", log_var)

    @classmethod
    def from_std(cls, mean, std) -> "LatentGaussian":
        std = _as_tensor(std)
        if torch.any(std <= 0):
            raise ValueError("std must be positive elementwise")
        return cls(_as_tensor(mean), 2.0 * torch.log(std))

    @property
    def clamped_log_var(self) -> torch.Tensor:
        return torch.clamp(self.log_var, -LOG_VAR_CLAMP, LOG_VAR_CLAMP)

    @property
    def std(self) -> torch.Tensor:
        return torch.exp(0.5 * self.clamped_log_var)

    @property
    def dim(self) -> int:
        return self.mean.shape[-1]


def sample_latent(g: LatentGaussian, noise) -> torch.Tensor:
    """Reparameterized sample: mean + std * noise.

    Differentiable w.r.t. the distribution parameters; the caller owns
    the noise draw so training stays deterministic under a fixed seed.
    """
    noise = _as_tensor(noise)
    if noise.shape[-1] != g.dim:
        raise ValueError(f"noise dimension {noise.shape[-1]} != latent dim {g.dim}")
    return g.mean + g.std * noise


def loss_reconstruction(output, truth) -> torch.Tensor:
    """Sum of squared differences (batch mean when inputs are batched)."""
    output = _as_tensor(output)
    truth = _as_tensor(truth)
    if output.shape != truth.shape:
        raise ValueError(f"length mismatch: {tuple(output.shape)} vs {tuple(truth.shape)}")
    sq = (output - truth) ** 2
    per_sample = sq.sum(dim=-1)
    return per_sample.mean() if per_sample.ndim > 0 else per_sample


def loss_kl(g: LatentGaussian) -> torch.Tensor:
    """KL(N(mean, std^2) || N(0, I)) for a diagonal Gaussian.

    Closed form per dimension: 0.5 * (std^2 + mean^2 - 1 - ln std^2).
    """
    log_var = g.clamped_log_var
    per_dim = 0.5 * (torch.exp(log_var) + g.mean**2 - 1.0 - log_var)
    per_sample = per_dim.sum(dim=-1)
    return per_sample.mean() if per_sample.ndim > 0 else per_sample


def loss_wasserstein(g_i: LatentGaussian, g_q: LatentGaussian) -> torch.Tensor:
    """Squared 2-Wasserstein distance between two diagonal Gaussians.

    ||mean_i - mean_q||^2 + sum_d (std_i - std_q)^2. This is the
    diagonal simplification of the Gaussian optimal-transport distance;
    it vanishes iff the two distributions coincide.
    """
    if g_i.dim != g_q.dim:
        raise ValueError("latent dimensions differ")
    mean_term = ((g_i.mean - g_q.mean) ** 2).sum(dim=-1)
    std_term = ((g_i.std - g_q.std) ** 2).sum(dim=-1)
    per_sample = mean_term + std_term
    return per_sample.mean() if per_sample.ndim > 0 else per_sample


class LossParts(NamedTuple):
    reconstruction: torch.Tensor
    i_regularizer: torch.Tensor
    q_regularizer: torch.Tensor
    alignment: torch.Tensor


def loss_total(parts: LossParts, gamma: float, eta: float) -> torch.Tensor:
    rc, ir, qr, da = (_as_tensor(p) for p in parts)
    return rc + gamma * (ir + qr) + eta * da
