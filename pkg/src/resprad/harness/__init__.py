from .experiment import (
    ExperimentConfig,
    build_scenes,
    collect_windows,
    evaluate_windows,
    locate_subject,
    run_experiment,
    sample_scenes,
)
from .metrics import (
    MetricSet,
    TimingMatch,
    centered_cosine,
    cosine_similarity,
    rate_error_bpm,
    timing_errors,
)

__all__ = [
    "ExperimentConfig",
    "MetricSet",
    "TimingMatch",
    "build_scenes",
    "centered_cosine",
    "collect_windows",
    "cosine_similarity",
    "evaluate_windows",
    "locate_subject",
    "rate_error_bpm",
    "run_experiment",
    "sample_scenes",
    "timing_errors",
]
