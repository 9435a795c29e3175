"""Scene synthesis: turn (Scene, RadarConfig) into the signal matrix.

Per slow-time frame n the subject contributes

    alpha * rcs(n) * exp(j * (4*pi/lambda) * (d_bar + drift(n) + z(n)))

at the fast-time bins around (d_bar + drift(n)) / bin_spacing, weighted
by a Gaussian fast-time envelope. The 4*pi/lambda factor is the two-way
path: a chest displacement of lambda/2 wraps the phase by a full turn.
Body-background offsets, static clutter and complex white noise are
added on top. Synthesis is a pure function of its inputs; the only
randomness is the noise stream seeded by scene.rng_seed.
"""

from __future__ import annotations

import numpy as np

from .respiration import gen_respiration
from .types import ComplexMatrix, RadarConfig, Scene, n_frames_for


def synth_matrix(scene: Scene, config: RadarConfig):
    """Synthesize one scene.

    Returns
    -------
    (ComplexMatrix, ndarray)
        The signal matrix (fast-time x slow-time, float64 planes) and
        the ground-truth chest displacement z(n) in meters.
    """
    n = n_frames_for(scene.duration, config.frame_rate)
    z = gen_respiration(scene.respiration, scene.duration, config.frame_rate)

    drift = _per_frame(scene.motion.distance_drift_trace, n, "distance_drift_trace")
    rcs = _per_frame(scene.motion.rcs_trace, n, "rcs_trace")
    offset = _per_frame(scene.motion.background_offset_trace, n, "background_offset_trace")

    pos_bins = (scene.subject_distance + drift) / config.bin_spacing
    if pos_bins.min() < 0 or pos_bins.max() > config.fast_time_bins - 1:
        raise ValueError(
            "subject drifts outside the fast-time range: bins "
            f"[{pos_bins.min():.2f}, {pos_bins.max():.2f}] of {config.fast_time_bins}"
        )

    four_pi_over_lambda = 4.0 * np.pi / config.wavelength
    phase = four_pi_over_lambda * (scene.subject_distance + drift + z)
    subject = scene.subject_amplitude * rcs * np.exp(1j * phase)

    # sigma = width/2 puts ~99.5% of the reflected energy within +-width bins
    sigma = 0.5 * (config.pulse_width_bins + scene.motion.bin_spread)
    bins = np.arange(config.fast_time_bins, dtype=float)[:, None]
    envelope = np.exp(-((bins - pos_bins[None, :]) ** 2) / (2.0 * sigma**2))

    matrix = envelope * subject[None, :]
    matrix += envelope * offset[None, :]

    sigma_c = 0.5 * config.pulse_width_bins
    for dist, amp in scene.static_clutter:
        pos = dist / config.bin_spacing
        env_c = np.exp(-((bins[:, 0] - pos) ** 2) / (2.0 * sigma_c**2))
        term = amp * np.exp(1j * four_pi_over_lambda * dist)
        matrix += env_c[:, None] * term

    if config.noise_std > 0:
        rng = np.random.default_rng(scene.rng_seed)
        scale = config.noise_std / np.sqrt(2.0)  # per component
        matrix += scale * rng.standard_normal(matrix.shape)
        matrix += 1j * scale * rng.standard_normal(matrix.shape)

    out = ComplexMatrix.from_complex(matrix, config.frame_rate, config.bin_spacing)
    return out, z


def subject_bin(scene: Scene, config: RadarConfig) -> int:
    """Nearest fast-time bin to the subject's mean position."""
    drift = scene.motion.distance_drift_trace
    mean_pos = scene.subject_distance + float(np.mean(drift))
    return int(round(mean_pos / config.bin_spacing))


def _per_frame(trace: np.ndarray, n: int, name: str) -> np.ndarray:
    trace = np.asarray(trace)
    if len(trace) == n:
        return trace
    if len(trace) == 1:
        return np.broadcast_to(trace, (n,))
    raise ValueError(
        f"{name} has {len(trace)} frames, scene has {n}; "
        "realize the motion profile for the scene duration"
    )
