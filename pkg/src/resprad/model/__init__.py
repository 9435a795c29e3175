from .checkpoint import load_checkpoint, save_checkpoint
from .inference import infer, infer_batch
from .losses import (
    LatentGaussian,
    LossParts,
    loss_kl,
    loss_reconstruction,
    loss_total,
    loss_wasserstein,
    sample_latent,
)
from .network import NetworkConfig, TwoStreamRecoveryNet, init_xavier_uniform
from .training import (
    LossHistory,
    TrainConfig,
    TrainingDiverged,
    normalize_truth,
    stack_windows,
    train,
)

__all__ = [
    "LatentGaussian",
    "LossHistory",
    "LossParts",
    "NetworkConfig",
    "TrainConfig",
    "TrainingDiverged",
    "TwoStreamRecoveryNet",
    "infer",
    "infer_batch",
    "init_xavier_uniform",
    "load_checkpoint",
    "loss_kl",
    "loss_reconstruction",
    "loss_total",
    "loss_wasserstein",
    "normalize_truth",
    "sample_latent",
    "save_checkpoint",
    "stack_windows",
    "train",
]
