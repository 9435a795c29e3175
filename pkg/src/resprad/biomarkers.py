"""Respiratory biomarkers from a recovered waveform.

Rate from the spectrum, cycle events from peak/valley picking, per-cycle
timings (total cycle, inhale, exhale, their ratio), the tidal-volume
proxy, respiration flow via a smooth noise-robust differentiator, and
the flow-volume loop.

Everything operates on plain 1-D arrays plus an explicit frame rate;
values are in whatever (possibly normalized) units the waveform uses,
which is fine because every downstream metric is scale-free except the
volume proxy, which is reported in the same units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.signal import butter, filtfilt, find_peaks
from scipy.special import binom

RESP_BAND_HZ = (0.16, 0.6)

# minimum spacing between same-type extrema: one cycle of the fastest
# physiological rate
MIN_SEPARATION_S = 1.0 / RESP_BAND_HZ[1]

# the report records how equal-height adjacent extrema are resolved
TIE_RULE = "earlier extremum kept on equal values"


@dataclass(frozen=True)
class RateEstimate:
    """Spectral rate estimate plus a sanity signal.

    in_band_dominance compares the in-band spectral peak against the
    strongest component anywhere above the near-DC region; values below
    0.5 flag waveforms whose energy mostly lives outside the
    physiological band (the estimate is then the in-band maximum, but it
    should not be trusted blindly).
    """

    hz: float
    in_band_dominance: float
    low_dominance: bool

    @property
    def bpm(self) -> float:
        return self.hz * 60.0


def estimate_rate_fft(
    w: np.ndarray,
    frame_rate: float,
    band: Tuple[float, float] = RESP_BAND_HZ,
) -> RateEstimate:
    """Respiratory rate from the windowed magnitude spectrum.

    The detrended waveform is Hann-windowed, the magnitude spectrum is
    restricted to ``band``, and the peak bin is refined by quadratic
    interpolation of the log magnitude, which resolves rates well below
    the raw FFT grid of a 20 s window.
    """
    w = np.asarray(w, dtype=float)
    if len(w) / frame_rate < 2.0 / band[0]:
        raise ValueError(
            f"window of {len(w) / frame_rate:.1f} s is shorter than two cycles "
            f"of the slowest rate ({2.0 / band[0]:.1f} s)"
        )
    x = (w - w.mean()) * np.hanning(len(w))
    mag = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(w), 1.0 / frame_rate)

    in_band = np.flatnonzero((freqs >= band[0]) & (freqs <= band[1]))
    if len(in_band) == 0:
        raise ValueError("no FFT bins inside the respiration band")
    k = int(in_band[np.argmax(mag[in_band])])

    hz = freqs[k] + _parabolic_offset(mag, k) * (freqs[1] - freqs[0])
    hz = float(np.clip(hz, band[0], band[1]))

    above_dc = np.flatnonzero(freqs > 0.08)
    denom = float(mag[above_dc].max()) if len(above_dc) else float(mag[k])
    dominance = float(mag[k] / denom) if denom > 0 else 1.0
    return RateEstimate(hz=hz, in_band_dominance=dominance, low_dominance=dominance < 0.5)


def _parabolic_offset(mag: np.ndarray, k: int) -> float:
    """Sub-bin peak offset from a log-magnitude parabola, in [-0.5, 0.5]."""
    if k <= 0 or k >= len(mag) - 1:
        return 0.0
    floor = 1e-15 * max(float(mag[k]), 1e-300)
    l0, l1, l2 = (np.log(max(float(m), floor)) for m in (mag[k - 1], mag[k], mag[k + 1]))
    denom = l0 - 2.0 * l1 + l2
    if abs(denom) < 1e-12:
        return 0.0
    return float(np.clip(0.5 * (l0 - l2) / denom, -0.5, 0.5))


@dataclass(frozen=True)
class CycleEvents:
    """Alternating peak and valley timestamps, in seconds."""

    peak_times: np.ndarray
    valley_times: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.peak_times, dtype=float)
        v = np.asarray(self.valley_times, dtype=float)
        for name, arr in (("peak_times", p), ("valley_times", v)):
            if arr.ndim != 1 or (len(arr) > 1 and np.any(np.diff(arr) <= 0)):
                raise ValueError(f"{name} must be strictly increasing")
        merged = sorted(
            [(t, "p") for t in p] + [(t, "v") for t in v], key=lambda e: e[0]
        )
        for (t0, k0), (t1, k1) in zip(merged, merged[1:]):
            if k0 == k1:
                raise ValueError(
                    f"events do not alternate near t={t0:.2f}s and t={t1:.2f}s"
                )
        object.__setattr__(self, "peak_times", p)
        object.__setattr__(self, "valley_times", v)

    @property
    def n_events(self) -> int:
        return len(self.peak_times) + len(self.valley_times)


def detect_cycles(
    w: np.ndarray,
    frame_rate: float,
    min_separation: float = MIN_SEPARATION_S,
    smooth_hz: float = 1.2,
) -> CycleEvents:
    """Peak/valley detection with physiological spacing.

    Extrema must clear a prominence of half the waveform's standard
    deviation and respect ``min_separation``. Picking runs on a
    zero-phase low-passed copy (cutoff ``smooth_hz``, well above the
    respiration band) so wideband noise cannot jitter the timestamps;
    extrema of band-limited signals are unmoved by the smoothing.
    Alternation is enforced by keeping the more extreme of adjacent
    same-type events, the earlier one on ties.
    """
    w = np.asarray(w, dtype=float)
    std = w.std()
    if len(w) < 3 or std == 0.0:
        return CycleEvents(np.array([]), np.array([]))

    x = _smooth(w, frame_rate, smooth_hz)
    distance = max(1, int(round(min_separation * frame_rate)))
    prominence = 0.5 * std
    peaks, _ = find_peaks(x, prominence=prominence, distance=distance)
    valleys, _ = find_peaks(-x, prominence=prominence, distance=distance)

    events = [(int(i), "p") for i in peaks] + [(int(i), "v") for i in valleys]
    events.sort()
    kept: List[Tuple[int, str]] = []
    for idx, kind in events:
        if kept and kept[-1][1] == kind:
            prev_idx = kept[-1][0]
            better = x[idx] > x[prev_idx] if kind == "p" else x[idx] < x[prev_idx]
            if better:  # strict: equal values keep the earlier event
                kept[-1] = (idx, kind)
        else:
            kept.append((idx, kind))

    peak_t = np.array([i / frame_rate for i, k in kept if k == "p"])
    valley_t = np.array([i / frame_rate for i, k in kept if k == "v"])
    return CycleEvents(peak_t, valley_t)


def _smooth(w: np.ndarray, frame_rate: float, smooth_hz: float) -> np.ndarray:
    if smooth_hz is None or smooth_hz <= 0 or smooth_hz >= 0.5 * frame_rate:
        return w
    b, a = butter(4, smooth_hz / (0.5 * frame_rate), btype="low")
    padlen = min(3 * max(len(a), len(b)), len(w) - 1)
    return filtfilt(b, a, w, padlen=padlen)


@dataclass
class CycleTimings:
    """Flat timing lists read off the event sequence.

    t_i pairs each peak with the valley before it, t_e each valley with
    the peak before it, t_tc successive peaks; ie_ratio pairs the inhale
    and exhale inside one peak-to-peak cycle, under which pairing
    t_tc = t_i + t_e holds exactly.
    """

    t_tc: np.ndarray = field(default_factory=lambda: np.array([]))
    t_i: np.ndarray = field(default_factory=lambda: np.array([]))
    t_e: np.ndarray = field(default_factory=lambda: np.array([]))
    ie_ratio: np.ndarray = field(default_factory=lambda: np.array([]))
    rate_instantaneous: np.ndarray = field(default_factory=lambda: np.array([]))
    reason: str = ""

    @property
    def n_cycles(self) -> int:
        return len(self.t_tc)


def compute_timings(ev: CycleEvents) -> CycleTimings:
    """Per-cycle timings from alternating events.

    Needs at least two peaks; otherwise an empty result is returned with
    the reason recorded.
    """
    p = ev.peak_times
    v = ev.valley_times
    if len(p) < 2:
        return CycleTimings(reason=f"need >= 2 peaks, found {len(p)}")

    t_tc = np.diff(p)
    t_i = np.array([pk - v[v < pk].max() for pk in p if np.any(v < pk)])
    t_e = np.array([vl - p[p < vl].max() for vl in v if np.any(p < vl)])

    ie, inner_valleys = [], []
    for k in range(len(p) - 1):
        between = v[(v > p[k]) & (v < p[k + 1])]
        # alternation guarantees exactly one valley inside each cycle
        vin = between[0]
        inner_valleys.append(vin)
        ie.append((p[k + 1] - vin) / (vin - p[k]))

    return CycleTimings(
        t_tc=t_tc,
        t_i=t_i,
        t_e=t_e,
        ie_ratio=np.array(ie),
        rate_instantaneous=1.0 / t_tc,
    )


def tidal_volume(w: np.ndarray, ev: CycleEvents, frame_rate: float) -> np.ndarray:
    """Per-cycle volume proxy: peak value minus preceding valley value."""
    w = np.asarray(w, dtype=float)
    v = ev.valley_times
    out = []
    for pk in ev.peak_times:
        before = v[v < pk]
        if len(before) == 0:
            continue
        p_val = w[int(round(pk * frame_rate))]
        v_val = w[int(round(before.max() * frame_rate))]
        out.append(p_val - v_val)
    return np.array(out)


def differentiator_coefficients(taps: int) -> np.ndarray:
    """Smooth noise-robust differentiator coefficients b_1..b_M.

    b_k = 2^{-(2m+1)} * [ C(2m, m-k+1) - C(2m, m-k-1) ],
    with m = (taps-3)/2 and M = (taps-1)/2. Exact on polynomials up to
    degree 1 (degree 2 for the centered form) while suppressing
    high-frequency noise.
    """
    if taps % 2 == 0 or taps < 5:
        raise ValueError("taps must be odd and >= 5")
    m = (taps - 3) // 2
    big_m = (taps - 1) // 2
    ks = np.arange(1, big_m + 1)
    return 2.0 ** (-(2 * m + 1)) * (binom(2 * m, m - ks + 1) - binom(2 * m, m - ks - 1))


def flow(w: np.ndarray, taps: int = 5, h: float = 1.0, c: float = 1.0) -> np.ndarray:
    """Respiration flow as the smoothed derivative of the volume proxy.

    q(n) = (c/h) * sum_k b_k * (w(n+k) - w(n-k)), with odd reflection
    padding at the edges so linear trends differentiate exactly up to
    the boundary. ``h`` is the sample spacing in seconds; ``c`` an
    uncalibrated proportionality constant.
    """
    w = np.asarray(w, dtype=float)
    if len(w) <= taps:
        raise ValueError("waveform shorter than the differentiator support")
    b = differentiator_coefficients(taps)
    big_m = (taps - 1) // 2
    kernel = np.zeros(taps)
    kernel[big_m + 1 :] = b  # coefficient of w(n+k)
    kernel[:big_m] = -b[::-1]  # coefficient of w(n-k)
    padded = np.pad(w, big_m, mode="reflect", reflect_type="odd")
    return (c / h) * np.correlate(padded, kernel, mode="valid")


@dataclass(frozen=True)
class FlowVolumeLoop:
    """Ordered (volume, flow) pairs over one or more cycles."""

    volume: np.ndarray
    flow: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.volume, self.flow])

    def area(self) -> float:
        """Signed shoelace area of the (closed) loop."""
        x, y = self.volume, self.flow
        return 0.5 * float(
            np.sum(x * np.roll(y, -1)) - np.sum(y * np.roll(x, -1))
        )


def flow_volume_loop(volume: np.ndarray, flow_trace: np.ndarray) -> FlowVolumeLoop:
    volume = np.asarray(volume, dtype=float)
    flow_trace = np.asarray(flow_trace, dtype=float)
    if volume.shape != flow_trace.shape:
        raise ValueError("volume and flow must have equal length")
    return FlowVolumeLoop(volume, flow_trace)


@dataclass
class BiomarkerReport:
    """Everything read from one window, with per-cycle alignment.

    Per-cycle arrays are aligned to peak-to-peak cycles: cycle k runs
    from peak k to peak k+1, t_e is its leading exhale, t_i the inhale
    that completes it, so t_tc[k] = t_e[k] + t_i[k] by construction.
    """

    rate_fft: RateEstimate
    events: CycleEvents
    t_tc: np.ndarray
    t_i: np.ndarray
    t_e: np.ndarray
    ie_ratio: np.ndarray
    rate_instantaneous: np.ndarray
    tidal_volume: np.ndarray
    flow: np.ndarray
    frame_rate: float
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "rate_fft_hz": self.rate_fft.hz,
            "rate_fft_bpm": self.rate_fft.bpm,
            "in_band_dominance": self.rate_fft.in_band_dominance,
            "low_dominance": self.rate_fft.low_dominance,
            "peak_times_s": self.events.peak_times.tolist(),
            "valley_times_s": self.events.valley_times.tolist(),
            "t_tc_s": self.t_tc.tolist(),
            "t_i_s": self.t_i.tolist(),
            "t_e_s": self.t_e.tolist(),
            "ie_ratio": self.ie_ratio.tolist(),
            "rate_instantaneous_hz": self.rate_instantaneous.tolist(),
            "tidal_volume": self.tidal_volume.tolist(),
            "notes": self.notes,
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"

    def cycle_rows(self) -> List[str]:
        """CSV rows, one per cycle, plus the header."""
        rows = ["cycle,t_tc_s,t_i_s,t_e_s,ie_ratio,rate_hz,tidal_volume"]
        for k in range(len(self.t_tc)):
            vals = (self.t_tc[k], self.t_i[k], self.t_e[k], self.ie_ratio[k],
                    self.rate_instantaneous[k], self.tidal_volume[k])
            # plain-float repr round-trips exactly; numpy scalars would not
            rows.append(",".join([str(k)] + [repr(float(v)) for v in vals]))
        return rows


def make_report(
    w: np.ndarray,
    frame_rate: float,
    min_separation: float = MIN_SEPARATION_S,
    band: Tuple[float, float] = RESP_BAND_HZ,
    flow_taps: int = 5,
) -> BiomarkerReport:
    """Full biomarker extraction for one waveform window."""
    w = np.asarray(w, dtype=float)
    rate = estimate_rate_fft(w, frame_rate, band)
    ev = detect_cycles(w, frame_rate, min_separation)

    p, v = ev.peak_times, ev.valley_times
    t_tc, t_i, t_e, ie, tv = [], [], [], [], []
    for k in range(len(p) - 1):
        between = v[(v > p[k]) & (v < p[k + 1])]
        vin = between[0]
        t_tc.append(p[k + 1] - p[k])
        t_e.append(vin - p[k])
        t_i.append(p[k + 1] - vin)
        ie.append(t_i[-1] / t_e[-1])
        p_val = w[int(round(p[k + 1] * frame_rate))]
        v_val = w[int(round(vin * frame_rate))]
        tv.append(p_val - v_val)
    t_tc = np.array(t_tc)

    notes = {"extremum_tie_rule": TIE_RULE}
    if rate.low_dominance:
        notes["low_in_band_dominance"] = rate.in_band_dominance
    if len(p) < 2:
        notes["insufficient_events"] = f"need >= 2 peaks, found {len(p)}"

    return BiomarkerReport(
        rate_fft=rate,
        events=ev,
        t_tc=t_tc,
        t_i=np.array(t_i),
        t_e=np.array(t_e),
        ie_ratio=np.array(ie),
        rate_instantaneous=1.0 / t_tc if len(t_tc) else np.array([]),
        tidal_volume=np.array(tv),
        flow=flow(w, taps=flow_taps, h=1.0 / frame_rate),
        frame_rate=frame_rate,
        notes=notes,
    )
