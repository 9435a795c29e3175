"""Domain types for the radar scene simulator.

Conventions used throughout the package:

* fast-time  = range-bin axis (index 0 of every matrix)
* slow-time  = frame axis (index 1), sampled at ``frame_rate`` frames/s
* all distances in meters, times in seconds, frequencies in Hz
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

RESP_RATE_MIN_HZ = 0.16
RESP_RATE_MAX_HZ = 0.6

RESPIRATION_KINDS = ("sinusoid", "asymmetric", "apnea-interleaved")
MOTION_KINDS = (
    "static",
    "sporadic-burst",
    "periodic-sway",
    "strong-periodic",
    "step-change",
    "slow-roll",
)


@dataclass(frozen=True)
class RadarConfig:
    """Static description of the radar front-end.

    Parameters
    ----------
    carrier_frequency : float
        Carrier in Hz. 7.29 GHz by default; 8.7 GHz is the other
        supported hardware setting.
    frame_rate : float
        Slow-time sampling rate in frames per second.
    fast_time_bins : int
        Number of range bins per frame.
    bin_spacing : float
        Meters of range per fast-time bin. The default corresponds to
        the range resolution of a 1.5 GHz bandwidth pulse, c/(2B).
    pulse_width_bins : float
        Fast-time spread of a point reflector. The reflected energy
        follows a Gaussian envelope exp(-d^2 / (2*(w/2)^2)) over bin
        distance d, so essentially all of it lands within +-w bins.
    noise_std : float
        Standard deviation of the complex white noise added per bin and
        frame (total power across I and Q).
    """

    carrier_frequency: float = 7.29e9
    frame_rate: float = 50.0
    fast_time_bins: int = 138
    bin_spacing: float = (SPEED_OF_LIGHT / 2.0) / 1.5e9
    pulse_width_bins: float = 2.0
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if self.carrier_frequency <= 0:
            raise ValueError("carrier_frequency must be positive")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        if self.fast_time_bins < 1:
            raise ValueError("fast_time_bins must be >= 1")
        if self.bin_spacing <= 0:
            raise ValueError("bin_spacing must be positive")
        if self.pulse_width_bins <= 0:
            raise ValueError("pulse_width_bins must be positive")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters (c / carrier_frequency)."""
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def max_range(self) -> float:
        return self.fast_time_bins * self.bin_spacing


@dataclass(frozen=True)
class RespirationProfile:
    """Parametric chest-displacement generator settings.

    kind
        "sinusoid"          pure tone at ``rate``
        "asymmetric"        distinct inhale/exhale durations; the cycle
                            rises for ``inhale_fraction`` of the period
                            and falls for the remainder (half-cosine
                            segments, so extrema are smooth)
        "apnea-interleaved" sinusoid with breath-hold spans during which
                            the displacement freezes at its span-start
                            value
    rate
        Breathing rate in Hz, restricted to the physiological band
        [0.16, 0.6].
    depth
        Chest displacement amplitude in meters (typical 0.002 - 0.01).
    """

    kind: str = "sinusoid"
    rate: float = 0.25
    depth: float = 0.005
    inhale_fraction: float = 0.4
    apnea_spans: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in RESPIRATION_KINDS:
            raise ValueError(f"unknown respiration kind {self.kind!r}")
        if not (RESP_RATE_MIN_HZ <= self.rate <= RESP_RATE_MAX_HZ):
            raise ValueError(
                f"rate {self.rate} Hz outside physiological band "
                f"[{RESP_RATE_MIN_HZ}, {RESP_RATE_MAX_HZ}]"
            )
        if self.depth <= 0:
            raise ValueError("depth must be positive")
        if not (0.0 < self.inhale_fraction < 1.0):
            raise ValueError("inhale_fraction must lie in (0, 1)")
        spans = tuple(tuple(s) for s in self.apnea_spans)
        object.__setattr__(self, "apnea_spans", spans)
        prev_end = None
        for start, end in spans:
            if end <= start or start < 0:
                raise ValueError(f"bad apnea span ({start}, {end})")
            if prev_end is not None and start < prev_end:
                raise ValueError("apnea spans must be non-overlapping and sorted")
            prev_end = end


@dataclass(frozen=True)
class MotionProfile:
    """Realized body-motion traces for one scene.

    The traces are realized arrays (one value per slow-time frame) built
    by :func:`resprad.sim.motion.make_motion`; storing the realization
    rather than process parameters keeps scene synthesis a pure function
    of its inputs.

    background_offset_trace
        Complex quasi-static body-reflection offset per frame (the I/Q
        offset that displaces the respiration arc from the origin). The
        synthesizer spreads it over the fast-time bins the motion energy
        crosses.
    distance_drift_trace
        Perturbation of the subject distance in meters, |drift| <= 0.5.
    rcs_trace
        Positive multiplier on the subject reflection strength per frame.
    bin_spread
        Extra fast-time bins (beyond the pulse width) the motion energy
        crosses.
    """

    kind: str = "static"
    background_offset_trace: np.ndarray = field(
        default_factory=lambda: np.zeros(1, dtype=complex)
    )
    distance_drift_trace: np.ndarray = field(default_factory=lambda: np.zeros(1))
    rcs_trace: np.ndarray = field(default_factory=lambda: np.ones(1))
    bin_spread: int = 0

    def __post_init__(self) -> None:
        if self.kind not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.kind!r}")
        offset = np.asarray(self.background_offset_trace, dtype=complex)
        drift = np.asarray(self.distance_drift_trace, dtype=float)
        rcs = np.asarray(self.rcs_trace, dtype=float)
        if not (offset.ndim == drift.ndim == rcs.ndim == 1):
            raise ValueError("motion traces must be 1-D")
        if not (len(offset) == len(drift) == len(rcs)):
            raise ValueError("motion traces must share one length")
        if np.max(np.abs(drift), initial=0.0) > 0.5:
            raise ValueError("|distance drift| must stay <= 0.5 m")
        if np.any(rcs <= 0):
            raise ValueError("rcs_trace must be positive everywhere")
        for name, arr in (("offset", offset), ("drift", drift), ("rcs", rcs)):
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError(f"{name} trace contains non-finite values")
        if self.bin_spread < 0:
            raise ValueError("bin_spread must be >= 0")
        object.__setattr__(self, "background_offset_trace", offset)
        object.__setattr__(self, "distance_drift_trace", drift)
        object.__setattr__(self, "rcs_trace", rcs)

    @property
    def n_frames(self) -> int:
        return len(self.distance_drift_trace)


@dataclass(frozen=True)
class Scene:
    """Everything the synthesizer needs besides the radar itself."""

    subject_distance: float = 1.0
    respiration: RespirationProfile = field(default_factory=RespirationProfile)
    motion: MotionProfile = field(default_factory=MotionProfile)
    static_clutter: Tuple[Tuple[float, float], ...] = ()
    duration: float = 20.0
    rng_seed: int = 0
    subject_amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not (0.5 <= self.subject_distance <= 2.0):
            raise ValueError("subject_distance must lie in [0.5, 2.0] m")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.subject_amplitude <= 0:
            raise ValueError("subject_amplitude must be positive")
        clutter = tuple((float(d), float(a)) for d, a in self.static_clutter)
        for dist, _amp in clutter:
            if dist < 0:
                raise ValueError("clutter distance must be >= 0")
        object.__setattr__(self, "static_clutter", clutter)


class ComplexMatrix:
    """The radar signal matrix r(t, n).

    Stored as separate I and Q planes (real float arrays of shape
    fast_time_bins x slow_time_frames) plus the sampling metadata needed
    to interpret the axes.
    """

    __slots__ = ("i_plane", "q_plane", "frame_rate", "bin_spacing")

    def __init__(
        self,
        i_plane: np.ndarray,
        q_plane: np.ndarray,
        frame_rate: float,
        bin_spacing: float,
    ) -> None:
        i_plane = np.asarray(i_plane)
        q_plane = np.asarray(q_plane)
        if i_plane.shape != q_plane.shape or i_plane.ndim != 2:
            raise ValueError("I and Q planes must be 2-D and share a shape")
        if not (np.all(np.isfinite(i_plane)) and np.all(np.isfinite(q_plane))):
            raise ValueError("signal matrix contains non-finite values")
        if frame_rate <= 0 or bin_spacing <= 0:
            raise ValueError("frame_rate and bin_spacing must be positive")
        self.i_plane = i_plane
        self.q_plane = q_plane
        self.frame_rate = float(frame_rate)
        self.bin_spacing = float(bin_spacing)

    @classmethod
    def from_complex(
        cls, iq: np.ndarray, frame_rate: float, bin_spacing: float
    ) -> "ComplexMatrix":
        iq = np.asarray(iq)
        return cls(
            np.ascontiguousarray(iq.real),
            np.ascontiguousarray(iq.imag),
            frame_rate,
            bin_spacing,
        )

    @property
    def iq(self) -> np.ndarray:
        """The complex matrix view, fast-time leading."""
        return self.i_plane + 1j * self.q_plane

    @property
    def n_bins(self) -> int:
        return self.i_plane.shape[0]

    @property
    def n_frames(self) -> int:
        return self.i_plane.shape[1]

    def slice_frames(self, start: int, stop: int) -> "ComplexMatrix":
        return ComplexMatrix(
            self.i_plane[:, start:stop],
            self.q_plane[:, start:stop],
            self.frame_rate,
            self.bin_spacing,
        )

    def astype(self, dtype) -> "ComplexMatrix":
        return ComplexMatrix(
            self.i_plane.astype(dtype),
            self.q_plane.astype(dtype),
            self.frame_rate,
            self.bin_spacing,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComplexMatrix):
            return NotImplemented
        return (
            self.frame_rate == other.frame_rate
            and self.bin_spacing == other.bin_spacing
            and self.i_plane.dtype == other.i_plane.dtype
            and np.array_equal(self.i_plane, other.i_plane)
            and np.array_equal(self.q_plane, other.q_plane)
        )


def n_frames_for(duration: float, frame_rate: float) -> int:
    """Slow-time frame count for a duration, rounding like the hardware."""
    return int(round(duration * frame_rate))
