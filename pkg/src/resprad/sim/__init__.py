from .corpus import Dataset, Record, load_corpus, make_dataset, save_corpus
from .motion import make_motion
from .respiration import gen_respiration
from .synth import subject_bin, synth_matrix
from .types import (
    MOTION_KINDS,
    RESP_RATE_MAX_HZ,
    RESP_RATE_MIN_HZ,
    RESPIRATION_KINDS,
    SPEED_OF_LIGHT,
    ComplexMatrix,
    MotionProfile,
    RadarConfig,
    RespirationProfile,
    Scene,
)

__all__ = [
    "ComplexMatrix",
    "Dataset",
    "MOTION_KINDS",
    "MotionProfile",
    "RESPIRATION_KINDS",
    "RESP_RATE_MAX_HZ",
    "RESP_RATE_MIN_HZ",
    "RadarConfig",
    "Record",
    "RespirationProfile",
    "SPEED_OF_LIGHT",
    "Scene",
    "gen_respiration",
    "load_corpus",
    "make_dataset",
    "make_motion",
    "save_corpus",
    "subject_bin",
    "synth_matrix",
]
