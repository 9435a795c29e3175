"""Deterministic inference: decode the sum of the two latent means."""

from __future__ import annotations

import numpy as np
import torch

from ..pipeline import SlowTimeWindow, standardize_batch
from .network import TwoStreamRecoveryNet


def infer(window: SlowTimeWindow, net: TwoStreamRecoveryNet) -> np.ndarray:
    """Recover the respiration waveform from one window.

    No sampling: both encoders contribute their posterior mean and the
    decoder runs on the elementwise sum, so repeated calls agree bit for
    bit. The output is normalized to zero mean and unit variance (the
    scale of the belt reference is arbitrary anyway).
    """
    out = infer_batch(
        window.i_channels[None].astype(np.float32),
        window.q_channels[None].astype(np.float32),
        net,
        out_len=window.n_frames,
    )
    return out[0]


def infer_batch(
    i_arr: np.ndarray,
    q_arr: np.ndarray,
    net: TwoStreamRecoveryNet,
    out_len: int | None = None,
) -> np.ndarray:
    """Vectorized infer over stacked windows of shape (N, C, L)."""
    if out_len is None:
        out_len = i_arr.shape[-1]
    was_training = net.training
    net.eval()
    try:
        with torch.no_grad():
            i_std, q_std = standardize_batch(i_arr, q_arr)
            x_i = torch.as_tensor(np.ascontiguousarray(i_std), dtype=torch.float32)
            x_q = torch.as_tensor(np.ascontiguousarray(q_std), dtype=torch.float32)
            z = net.encode_i(x_i).mean + net.encode_q(x_q).mean
            w = net.decode(z, out_len=out_len).numpy()
    finally:
        if was_training:
            net.train()
    return _normalize_rows(w)


def _normalize_rows(w: np.ndarray) -> np.ndarray:
    centered = w - w.mean(axis=-1, keepdims=True)
    std = centered.std(axis=-1, keepdims=True)
    flat = std[..., 0] < 1e-12
    std[flat] = 1.0
    out = centered / std
    out[flat] = 0.0
    return out
