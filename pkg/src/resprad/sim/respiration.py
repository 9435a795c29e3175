"""Chest-displacement waveform generation, z(n)."""

from __future__ import annotations

import numpy as np

from .types import RespirationProfile, n_frames_for


def gen_respiration(
    profile: RespirationProfile, duration: float, frame_rate: float
) -> np.ndarray:
    """Generate the ground-truth chest displacement z(n).

    Parameters
    ----------
    profile : RespirationProfile
    duration : float
        Length in seconds.
    frame_rate : float
        Slow-time sampling rate in Hz.

    Returns
    -------
    ndarray
        round(duration * frame_rate) samples in meters, bounded by
        [-depth, +depth].
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = n_frames_for(duration, frame_rate)
    t = np.arange(n) / frame_rate

    if profile.kind == "asymmetric":
        z = _asymmetric(t, profile.rate, profile.depth, profile.inhale_fraction)
    else:
        # "apnea-interleaved" freezes spans of a plain sinusoid
        z = profile.depth * np.sin(2.0 * np.pi * profile.rate * t)

    for start_s, end_s in profile.apnea_spans:
        start = int(round(start_s * frame_rate))
        end = int(round(end_s * frame_rate))
        if start >= n:
            continue
        end = min(end, n - 1)
        z[start : end + 1] = z[start]

    return z


def _asymmetric(
    t: np.ndarray, rate: float, depth: float, inhale_fraction: float
) -> np.ndarray:
    """Half-cosine rise over inhale_fraction of the cycle, fall over the rest.

    Starts at a trough (-depth), peaks at inhale_fraction * T, returns to
    -depth at T. Smooth (zero slope) at every extremum.
    """
    period = 1.0 / rate
    phase = np.mod(t, period) / period  # cycle position in [0, 1)
    z = np.empty_like(t)
    rising = phase < inhale_fraction
    s_up = phase[rising] / inhale_fraction
    z[rising] = -depth * np.cos(np.pi * s_up)
    s_down = (phase[~rising] - inhale_fraction) / (1.0 - inhale_fraction)
    z[~rising] = depth * np.cos(np.pi * s_down)
    return z
