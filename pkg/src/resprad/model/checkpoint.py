"""Checkpoint format: JSON manifest + raw float32 parameter blocks.

`manifest.json` records the architecture and training configs, the
epoch count, the loss history, and the exact order, shape and role of
every tensor block. `params.f32` holds the tensors flattened row-major,
concatenated in manifest order, little-endian float32. The loss history
is additionally exported as `loss_history.csv`.

Integer buffers (the batch counters of the normalization layers) ride
along as float32; they are exact below 2**24 and restored to their
original dtype on load.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .network import NetworkConfig, TwoStreamRecoveryNet
from .training import EpochLoss, LossHistory, TrainConfig

FORMAT_NAME = "resprad-checkpoint-v1"

CSV_HEADER = "epoch,reconstruction,i_regularizer,q_regularizer,alignment,total"


def save_checkpoint(
    path,
    net: TwoStreamRecoveryNet,
    train_cfg: TrainConfig | None = None,
    history: LossHistory | None = None,
) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    blocks = []
    chunks = []
    for name, tensor in net.state_dict().items():
        arr = tensor.detach().cpu().numpy()
        blocks.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": str(arr.dtype),
            }
        )
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").reshape(-1))
    (path / "params.f32").write_bytes(np.concatenate(chunks).tobytes() if chunks else b"")

    history = history or LossHistory()
    manifest = {
        "format": FORMAT_NAME,
        "network": asdict(net.cfg),
        "train": asdict(train_cfg) if train_cfg is not None else None,
        "epochs_trained": len(history),
        "loss_history": [e.as_row() for e in history],
        "blocks": blocks,
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")

    lines = [CSV_HEADER]
    for e in history:
        row = e.as_row()
        lines.append(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]))
    (path / "loss_history.csv").write_text("\n".join(lines) + "\n")


def load_checkpoint(path):
    """Rebuild the network from a checkpoint directory.

    Returns (net, manifest). The net is in eval mode.
    """
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest.get("format") != FORMAT_NAME:
        raise ValueError(f"not a {FORMAT_NAME} checkpoint: {path}")

    net_kwargs = dict(manifest["network"])
    net_kwargs["encoder_channels"] = tuple(net_kwargs["encoder_channels"])
    net_kwargs["decoder_channels"] = tuple(net_kwargs["decoder_channels"])
    net = TwoStreamRecoveryNet(NetworkConfig(**net_kwargs), init_seed=0)

    data = np.frombuffer((path / "params.f32").read_bytes(), dtype="<f4")
    state = {}
    cursor = 0
    for block in manifest["blocks"]:
        size = int(np.prod(block["shape"])) if block["shape"] else 1
        chunk = data[cursor : cursor + size].reshape(block["shape"])
        cursor += size
        state[block["name"]] = torch.as_tensor(
            chunk.astype(np.dtype(block["dtype"]), copy=True)
        )
    if cursor != data.size:
        raise ValueError(
            f"params.f32 holds {data.size} values, manifest describes {cursor}"
        )
    net.load_state_dict(state)
    net.eval()
    return net, manifest


def history_from_manifest(manifest) -> LossHistory:
    history = LossHistory()
    for row in manifest.get("loss_history", []):
        history.epochs.append(EpochLoss(int(row[0]), *[float(v) for v in row[1:]]))
    return history
