"""Scoring for recovered waveforms against the ground truth.

Waveform agreement is cosine similarity between mean-removed signals
(recovered scale is arbitrary, so only the shape counts), rate and
timing agreement come from the biomarker estimators applied to both
sides so estimator bias cancels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..biomarkers import MIN_SEPARATION_S


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Plain cosine of the angle between two vectors, in [-1, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"expected equal-length 1-D arrays, got {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def centered_cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity after removing each signal's mean."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return cosine_similarity(a - a.mean(), b - b.mean())


def rate_error_bpm(estimated_hz: float, true_hz: float) -> float:
    """Absolute rate error in breaths per minute."""
    return abs(estimated_hz - true_hz) * 60.0


@dataclass
class TimingMatch:
    """Result of matching estimated event times against reference times."""

    errors: np.ndarray
    pairs: List[Tuple[int, int]]
    n_estimated: int
    n_reference: int

    @property
    def n_matched(self) -> int:
        return len(self.pairs)

    @property
    def match_rate(self) -> float:
        return self.n_matched / self.n_reference if self.n_reference else 0.0

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors)) if len(self.errors) else float("nan")

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors)) if len(self.errors) else float("nan")


def timing_errors(
    estimated: np.ndarray,
    reference: np.ndarray,
    max_gap: float = MIN_SEPARATION_S,
) -> TimingMatch:
    """One-to-one greedy matching of event timestamps.

    Candidate pairs closer than ``max_gap`` are accepted best-first;
    each event participates in at most one pair, so an extra or missing
    event costs a match instead of skewing every downstream error.
    Ties prefer the earlier reference, then the earlier estimate.
    """
    est = np.asarray(estimated, dtype=float)
    ref = np.asarray(reference, dtype=float)
    cand = [
        (abs(e - r), ri, ei)
        for ei, e in enumerate(est)
        for ri, r in enumerate(ref)
        if abs(e - r) <= max_gap
    ]
    cand.sort()
    used_e, used_r = set(), set()
    pairs, errors = [], []
    for err, ri, ei in cand:
        if ei in used_e or ri in used_r:
            continue
        used_e.add(ei)
        used_r.add(ri)
        pairs.append((ei, ri))
        errors.append(err)
    return TimingMatch(
        errors=np.array(errors),
        pairs=pairs,
        n_estimated=len(est),
        n_reference=len(ref),
    )


@dataclass
class MetricSet:
    """Aggregate over many windows for one method on one condition."""

    cosines: List[float] = field(default_factory=list)
    rate_errors_bpm: List[float] = field(default_factory=list)
    timing_errors_s: List[float] = field(default_factory=list)
    n_reference_peaks: int = 0
    n_matched_peaks: int = 0
    n_failures: int = 0

    def add_window(
        self,
        cosine: float,
        rate_err: float | None = None,
        timing: TimingMatch | None = None,
    ) -> None:
        self.cosines.append(float(cosine))
        if rate_err is not None:
            self.rate_errors_bpm.append(float(rate_err))
        if timing is not None:
            self.timing_errors_s.extend(float(e) for e in timing.errors)
            self.n_reference_peaks += timing.n_reference
            self.n_matched_peaks += timing.n_matched

    def as_dict(self) -> dict:
        def _med(v):
            return float(np.median(v)) if len(v) else None

        return {
            "n_windows": len(self.cosines),
            "mean_cosine": float(np.mean(self.cosines)) if self.cosines else None,
            "median_cosine": _med(self.cosines),
            "median_rate_error_bpm": _med(self.rate_errors_bpm),
            "median_peak_timing_error_s": _med(self.timing_errors_s),
            "peak_match_rate": (
                self.n_matched_peaks / self.n_reference_peaks
                if self.n_reference_peaks
                else None
            ),
            "n_failures": self.n_failures,
        }
