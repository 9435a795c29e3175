"""Parametric body-motion generators.

The underlying study only ever describes motion interference by its
effects on the I/Q signal: the arc center shifts (background-reflection
offset), the subject distance drifts, the reflection strength varies,
and the energy smears across neighbouring range bins. Each motion kind
here realizes those effects with the simplest controllable stochastic
process so that experiments stay reproducible:

* static          constant offset, nothing varies
* sporadic-burst  Poisson-gated band-limited noise (typewriting-like)
* periodic-sway   single-tone sway, 0.25 - 1 Hz (seated exercise-like)
* strong-periodic high-rate, high-amplitude tone + harmonic (treadmill-like)
* step-change     a few sigmoid level changes (stand/sit-like)
* slow-roll       one slow, large transition (turn-over-like)

All generators draw from the ``numpy.random.Generator`` they are given
and never touch global state.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .types import MOTION_KINDS, MotionProfile, n_frames_for

DRIFT_LIMIT = 0.5  # scope bound on |distance drift|, meters
_DRIFT_CLIP = 0.45  # realized traces stay clear of the hard bound
_RCS_FLOOR = 0.15


def make_motion(
    kind: str,
    duration: float,
    frame_rate: float,
    rng: np.random.Generator,
    severity: float = 1.0,
) -> MotionProfile:
    """Realize motion traces for one scene.

    Parameters
    ----------
    kind : str
        One of the six motion kinds.
    duration, frame_rate : float
        Scene length in seconds and slow-time rate in Hz.
    rng : numpy.random.Generator
        Source of randomness; pass a scene-seeded generator for
        reproducible corpora.
    severity : float
        Scales offset, drift and reflection-strength excursions.
    """
    if kind not in MOTION_KINDS:
        raise ValueError(f"unknown motion kind {kind!r}")
    n = n_frames_for(duration, frame_rate)
    t = np.arange(n) / frame_rate
    builder = _BUILDERS[kind]
    offset, drift, rcs, spread = builder(t, frame_rate, rng, severity)
    drift = np.clip(drift, -_DRIFT_CLIP, _DRIFT_CLIP)
    rcs = np.maximum(rcs, _RCS_FLOOR)
    return MotionProfile(
        kind=kind,
        background_offset_trace=offset.astype(complex),
        distance_drift_trace=drift.astype(float),
        rcs_trace=rcs.astype(float),
        bin_spread=spread,
    )


def _constant_offset(rng: np.random.Generator, lo: float = 0.4, hi: float = 1.8):
    mag = rng.uniform(lo, hi)
    ang = rng.uniform(0.0, 2.0 * np.pi)
    return mag * np.exp(1j * ang)


def _smooth_noise(
    n: int, frame_rate: float, cutoff_hz: float, rng: np.random.Generator
) -> np.ndarray:
    """Unit-variance Gaussian noise smoothed to roughly cutoff_hz bandwidth."""
    sigma = frame_rate / (2.0 * np.pi * cutoff_hz)
    x = gaussian_filter1d(rng.standard_normal(n), sigma, mode="reflect")
    std = x.std()
    return x / std if std > 0 else x


def _sigmoid(t: np.ndarray, t0: float, width: float) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-(t - t0) / max(width, 1e-6)))


def _static(t, frame_rate, rng, severity):
    n = len(t)
    offset = np.full(n, _constant_offset(rng))
    return offset, np.zeros(n), np.ones(n), 0


def _sporadic_burst(t, frame_rate, rng, severity):
    n = len(t)
    duration = t[-1] + 1.0 / frame_rate if n else 0.0
    gate = np.zeros(n)
    # Poisson burst arrivals at ~0.15/s, each lasting 0.4 - 1.5 s
    n_bursts = rng.poisson(max(0.15 * duration, 1e-9))
    n_bursts = max(n_bursts, 1)  # at least one event, otherwise it is "static"
    for _ in range(n_bursts):
        start = rng.uniform(0.0, max(duration - 0.5, 0.1))
        stop = start + rng.uniform(0.4, 1.5)
        gate[(t >= start) & (t < stop)] = 1.0
    gate = gaussian_filter1d(gate, 0.12 * frame_rate, mode="reflect")

    amp = rng.uniform(0.5, 1.2) * severity
    offset = np.full(n, _constant_offset(rng))
    offset = offset + amp * gate * (
        _smooth_noise(n, frame_rate, 3.0, rng) + 1j * _smooth_noise(n, frame_rate, 3.0, rng)
    )
    drift = 0.02 * severity * gate * _smooth_noise(n, frame_rate, 1.5, rng)
    rcs = 1.0 + 0.25 * severity * gate * _smooth_noise(n, frame_rate, 2.0, rng)
    return offset, drift, rcs, 1


def _periodic_sway(t, frame_rate, rng, severity):
    n = len(t)
    f = rng.uniform(0.25, 1.0)
    base = _constant_offset(rng)
    a_i = rng.uniform(0.3, 0.8) * severity
    a_q = rng.uniform(0.3, 0.8) * severity
    ph = rng.uniform(0.0, 2.0 * np.pi, size=4)
    offset = (
        base
        + a_i * np.cos(2 * np.pi * f * t + ph[0])
        + 1j * a_q * np.cos(2 * np.pi * f * t + ph[1])
    )
    drift = rng.uniform(0.01, 0.04) * severity * np.sin(2 * np.pi * f * t + ph[2])
    rcs = 1.0 + 0.2 * severity * np.cos(2 * np.pi * f * t + ph[3])
    return offset, drift, rcs, 1


def _strong_periodic(t, frame_rate, rng, severity):
    n = len(t)
    f = rng.uniform(0.9, 2.0)
    base = _constant_offset(rng)
    a_i = rng.uniform(0.8, 1.8) * severity
    a_q = rng.uniform(0.8, 1.8) * severity
    ph = rng.uniform(0.0, 2.0 * np.pi, size=5)
    offset = (
        base
        + a_i * np.cos(2 * np.pi * f * t + ph[0])
        + 1j * a_q * np.cos(2 * np.pi * f * t + ph[1])
        + 0.3 * a_i * np.cos(4 * np.pi * f * t + ph[2])
    )
    drift = rng.uniform(0.08, 0.2) * severity * np.sin(2 * np.pi * f * t + ph[3])
    rcs = (
        1.0
        + 0.4 * severity * np.cos(2 * np.pi * f * t + ph[4])
        + 0.15 * severity * np.cos(4 * np.pi * f * t + ph[2])
    )
    return offset, drift, rcs, 2


def _step_change(t, frame_rate, rng, severity):
    n = len(t)
    duration = t[-1] if n else 0.0
    n_steps = int(rng.integers(1, 4))
    times = np.sort(rng.uniform(0.1 * duration, 0.9 * duration, size=n_steps))

    offset = np.full(n, _constant_offset(rng))
    drift = np.full(n, rng.uniform(-0.2, 0.2) * severity)
    rcs = np.full(n, rng.uniform(0.7, 1.3))
    for t0 in times:
        width = rng.uniform(0.2, 0.6)
        s = _sigmoid(t, t0, width)
        offset = offset + severity * _constant_offset(rng, 0.3, 1.2) * s
        drift = drift + rng.uniform(-0.25, 0.25) * severity * s
        rcs = rcs + rng.uniform(-0.4, 0.4) * s
    return offset, drift, rcs, 1


def _slow_roll(t, frame_rate, rng, severity):
    n = len(t)
    duration = t[-1] if n else 0.0
    t0 = rng.uniform(0.25, 0.75) * duration
    width = rng.uniform(1.5, 4.0)
    s = _sigmoid(t, t0, width)

    o1 = _constant_offset(rng)
    o2 = _constant_offset(rng)
    offset = o1 + (o2 - o1) * s
    d1 = rng.uniform(-0.3, 0.3) * severity
    d2 = rng.uniform(-0.3, 0.3) * severity
    drift = d1 + (d2 - d1) * s
    r1 = rng.uniform(0.5, 1.5)
    r2 = rng.uniform(0.5, 1.5)
    rcs = r1 + (r2 - r1) * s
    return offset, drift, rcs, 2


_BUILDERS = {
    "static": _static,
    "sporadic-burst": _sporadic_burst,
    "periodic-sway": _periodic_sway,
    "strong-periodic": _strong_periodic,
    "step-change": _step_change,
    "slow-roll": _slow_roll,
}
