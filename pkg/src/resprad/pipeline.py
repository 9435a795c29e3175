"""Classical preprocessing between the radar matrix and the network.

Clutter removal -> CFAR range localization -> submatrix extraction ->
rotation augmentation. All functions are pure; nothing here mutates its
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .sim.types import ComplexMatrix


@dataclass(frozen=True)
class SlowTimeWindow:
    """A transposed submatrix: per-bin I and Q slow-time sequences.

    Rows are fast-time channels (bins), the inner axis is slow time, so
    each row is directly a 1-D sequence for the network or a baseline.
    """

    i_channels: np.ndarray
    q_channels: np.ndarray
    center_bin: int
    frame_rate: float

    def __post_init__(self) -> None:
        i = np.asarray(self.i_channels)
        q = np.asarray(self.q_channels)
        if i.shape != q.shape or i.ndim != 2:
            raise ValueError("i_channels and q_channels must be 2-D with equal shape")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(q))):
            raise ValueError("window contains non-finite values")
        object.__setattr__(self, "i_channels", i)
        object.__setattr__(self, "q_channels", q)

    @property
    def n_channels(self) -> int:
        return self.i_channels.shape[0]

    @property
    def n_frames(self) -> int:
        return self.i_channels.shape[1]

    def subject_trace(self) -> np.ndarray:
        """Complex slow-time trace of the middle (subject) channel."""
        mid = self.n_channels // 2
        return self.i_channels[mid] + 1j * self.q_channels[mid]


@dataclass(frozen=True)
class CfarParams:
    """Cell-averaging CFAR settings (counts are per side)."""

    train_cells: int = 8
    guard_cells: int = 2
    threshold_scale: float = 3.0

    def __post_init__(self) -> None:
        if self.train_cells < 1:
            raise ValueError("train_cells must be >= 1")
        if self.guard_cells < 0:
            raise ValueError("guard_cells must be >= 0")
        if self.threshold_scale <= 0:
            raise ValueError("threshold_scale must be positive")

    @property
    def window_width(self) -> int:
        return 2 * (self.train_cells + self.guard_cells) + 1


def remove_clutter(matrix: ComplexMatrix, beta: float = 0.9):
    """First-order recursive clutter estimate and its residual.

    The clutter estimate follows c_n = beta * c_{n-1} + (1-beta) * r_n
    with c_1 initialized to the first frame, so a constant input leaves
    zero residual from frame one. Returns (clutter, residual).
    """
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie strictly inside (0, 1)")
    iq = matrix.iq
    # one-pole IIR along slow time; zi = beta * r_1 makes c_1 = r_1 exactly
    zi = beta * iq[:, :1]
    clutter, _ = lfilter([1.0 - beta], [1.0, -beta], iq, axis=1, zi=zi)
    residual = iq - clutter
    mk = lambda m: ComplexMatrix.from_complex(m, matrix.frame_rate, matrix.bin_spacing)
    return mk(clutter), mk(residual)


def slow_time_statistic(residual: ComplexMatrix) -> np.ndarray:
    """CFAR test statistic: time-mean of |residual| per fast-time bin."""
    return np.abs(residual.iq).mean(axis=1)


def cfar_detect(residual: ComplexMatrix, params: CfarParams = CfarParams()):
    """Cell-averaging CFAR over the slow-time statistic.

    A bin is detected when its statistic exceeds threshold_scale times
    the mean statistic of its train cells (train_cells per side, with
    guard_cells skipped next to the cell under test; cells falling off
    the array edge are simply absent from the mean). Returns detected
    bin indices sorted by statistic, strongest first.
    """
    if residual.n_frames < 1 or residual.n_bins < 1:
        raise ValueError("residual matrix is empty")
    stat = slow_time_statistic(residual)
    n = len(stat)
    if n < params.window_width:
        raise ValueError(
            f"{n} bins is narrower than the CFAR window ({params.window_width})"
        )

    inner = params.guard_cells
    outer = params.guard_cells + params.train_cells
    sum_outer, cnt_outer = _windowed_sum(stat, outer)
    sum_inner, cnt_inner = _windowed_sum(stat, inner)
    train_sum = sum_outer - sum_inner
    train_cnt = cnt_outer - cnt_inner
    noise = train_sum / train_cnt

    detected = np.flatnonzero(stat > params.threshold_scale * noise)
    order = np.argsort(-stat[detected], kind="stable")
    return [int(i) for i in detected[order]]


def _windowed_sum(stat: np.ndarray, radius: int):
    """Sum and count of stat over [i-radius, i+radius], clipped to bounds."""
    n = len(stat)
    csum = np.concatenate(([0.0], np.cumsum(stat)))
    idx = np.arange(n)
    lo = np.maximum(idx - radius, 0)
    hi = np.minimum(idx + radius, n - 1)
    return csum[hi + 1] - csum[lo], (hi - lo + 1).astype(float)


def extract_window(
    matrix: ComplexMatrix, center_bin: int, half_width: int = 8
) -> SlowTimeWindow:
    """Cut the (2*half_width+1)-channel submatrix around center_bin.

    The result is transposed relative to the matrix convention in the
    sense that each channel row is a ready-to-use slow-time sequence.
    """
    if half_width < 0:
        raise ValueError("half_width must be >= 0")
    lo = center_bin - half_width
    hi = center_bin + half_width
    if lo < 0 or hi >= matrix.n_bins:
        raise ValueError(
            f"window [{lo}, {hi}] falls outside the {matrix.n_bins} fast-time bins"
        )
    return SlowTimeWindow(
        i_channels=matrix.i_plane[lo : hi + 1].copy(),
        q_channels=matrix.q_plane[lo : hi + 1].copy(),
        center_bin=center_bin,
        frame_rate=matrix.frame_rate,
    )


def embed_window(window: SlowTimeWindow, matrix: ComplexMatrix) -> ComplexMatrix:
    """Write a window back at its bins; inverse of extract_window."""
    half = (window.n_channels - 1) // 2
    lo = window.center_bin - half
    i_plane = matrix.i_plane.copy()
    q_plane = matrix.q_plane.copy()
    i_plane[lo : lo + window.n_channels] = window.i_channels
    q_plane[lo : lo + window.n_channels] = window.q_channels
    return ComplexMatrix(i_plane, q_plane, matrix.frame_rate, matrix.bin_spacing)


def standardize_batch(i_arr: np.ndarray, q_arr: np.ndarray, eps: float = 1e-8):
    """Per-window nuisance removal before the network.

    Subtracts each channel's slow-time mean (the quasi-static offset
    component) and divides both planes by one shared per-window scale
    (the joint I/Q rms), so windows differ in waveform content rather
    than in absolute amplitude or offset. Using a single scale for both
    planes keeps the I/Q geometry intact, and the transform commutes
    with rotate_iq: rotation is a per-sample isometry, so channel means
    rotate along and the joint rms is unchanged.

    Accepts (C, L) single windows or (N, C, L) batches; returns float32.
    """
    i = np.asarray(i_arr, dtype=np.float32)
    q = np.asarray(q_arr, dtype=np.float32)
    if i.shape != q.shape or i.ndim not in (2, 3):
        raise ValueError(f"expected matching (C, L) or (N, C, L) arrays, got {i.shape}")
    i = i - i.mean(axis=-1, keepdims=True)
    q = q - q.mean(axis=-1, keepdims=True)
    reduce_axes = tuple(range(i.ndim - 2, i.ndim))
    scale = np.sqrt((i**2 + q**2).mean(axis=reduce_axes, keepdims=True))
    scale = np.maximum(scale, eps)
    return i / scale, q / scale


def rotate_iq(window: SlowTimeWindow, theta: float) -> SlowTimeWindow:
    """Rotate every (i, q) sample by theta radians.

    [i']   [cos(theta)  -sin(theta)] [i]
    [q'] = [sin(theta)   cos(theta)] [q]

    Rotation shifts every absolute phase by theta and so only changes
    the apparent subject distance; phase differences, and with them the
    respiration content, are untouched.
    """
    c, s = np.cos(theta), np.sin(theta)
    return SlowTimeWindow(
        i_channels=window.i_channels * c - window.q_channels * s,
        q_channels=window.i_channels * s + window.q_channels * c,
        center_bin=window.center_bin,
        frame_rate=window.frame_rate,
    )


def augment(window: SlowTimeWindow, count: int):
    """count rotations of the window at angles k * 2*pi/count, k = 0..count-1.

    Element 0 is the unrotated window; downstream each copy pairs with
    the unchanged ground truth.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    step = 2.0 * np.pi / count
    return [rotate_iq(window, k * step) for k in range(count)]


def rotate_matrix(matrix: ComplexMatrix, theta: float) -> ComplexMatrix:
    """Matrix-level analogue of rotate_iq (used by corpus augmentation)."""
    c, s = np.cos(theta), np.sin(theta)
    return ComplexMatrix(
        matrix.i_plane * c - matrix.q_plane * s,
        matrix.i_plane * s + matrix.q_plane * c,
        matrix.frame_rate,
        matrix.bin_spacing,
    )
