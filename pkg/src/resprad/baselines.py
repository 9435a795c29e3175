"""Classical single-bin waveform recovery for comparison.

Three projections of a complex slow-time trace onto a real waveform:
raw magnitude, unwrapped phase (optionally band-passed), and the
ellipse-centered arctangent demodulator. The last one fits a conic to
the I/Q scatter, removes the fitted center, and reads the phase of the
centered samples, which undoes a constant additive offset (antenna
leakage, background reflections) that plain phase projection cannot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import butter, filtfilt

from .biomarkers import RESP_BAND_HZ


class EllipseFitError(ValueError):
    """The I/Q scatter does not support an ellipse fit."""


def _as_trace(trace: np.ndarray) -> np.ndarray:
    trace = np.asarray(trace)
    if trace.ndim != 1:
        raise ValueError(f"expected a 1-D slow-time trace, got shape {trace.shape}")
    if len(trace) == 0:
        raise ValueError("empty trace")
    if not np.all(np.isfinite(trace.view(float) if np.iscomplexobj(trace) else trace)):
        raise ValueError("trace contains non-finite values")
    return trace.astype(complex)


def project_amplitude(trace: np.ndarray) -> np.ndarray:
    """Magnitude of the slow-time samples."""
    return np.abs(_as_trace(trace))


def project_phase(trace: np.ndarray) -> np.ndarray:
    """Unwrapped phase angle of the slow-time samples, in radians.

    Proportional to radial displacement only when the trace rotates
    about the origin; any additive offset warps it nonlinearly.
    """
    return np.unwrap(np.angle(_as_trace(trace)))


def bandpass_baseline(
    trace: np.ndarray,
    frame_rate: float,
    band: Tuple[float, float] = RESP_BAND_HZ,
    order: int = 3,
) -> np.ndarray:
    """Phase projection band-limited to the respiration band.

    Zero-phase Butterworth filtering keeps the timing of peaks intact.
    """
    if not 0.0 < band[0] < band[1] < 0.5 * frame_rate:
        raise ValueError(f"band {band} does not fit below Nyquist ({frame_rate / 2} Hz)")
    w = project_phase(trace)
    b, a = butter(order, band, btype="bandpass", fs=frame_rate)
    # the low band edge rings for seconds; pad by a few of its periods or
    # the transient leaks deep into the output
    padlen = min(len(w) - 1, int(round(3.0 * frame_rate / band[0])))
    if len(w) <= 3 * max(len(a), len(b)):
        raise ValueError(f"trace too short for order-{order} filtering ({len(w)} samples)")
    return filtfilt(b, a, w, padlen=padlen)


@dataclass(frozen=True)
class EllipseFit:
    """Fitted conic in axis form. a >= b > 0; theta in radians."""

    center: Tuple[float, float]
    a: float
    b: float
    theta: float
    residual: float
    method: str = "ellipse"

    def __post_init__(self) -> None:
        if not (self.a >= self.b > 0.0):
            raise ValueError(f"invalid semi-axes a={self.a}, b={self.b}")
        if self.method not in ("ellipse", "circle"):
            raise ValueError(f"unknown fit method {self.method!r}")


# fits whose relative geometric residual exceeds this are rejected:
# the scatter is then not arc-like and the centered phase is meaningless
MAX_RELATIVE_RESIDUAL = 0.25

# beyond this axis ratio the conic is effectively degenerate and the
# center estimate unstable; a circle fit is better conditioned
MAX_AXIS_RATIO = 20.0

# the conic is fitted on a running average over this fraction of the
# record (a tiny slice of one breathing cycle), so wideband noise does
# not dominate the residual; demodulation still uses the raw samples
SMOOTH_FRACTION = 0.01


def fit_ellipse_arctan(trace: np.ndarray) -> Tuple[EllipseFit, np.ndarray]:
    """Center the I/Q scatter by an ellipse fit, then demodulate by phase.

    Returns the fit and the unwrapped phase of the centered samples.
    Raises EllipseFitError for degenerate scatters (too few points, no
    spread, collinear) and for fits that do not describe the data.
    """
    t = _as_trace(trace)
    if len(t) < 8:
        raise EllipseFitError(f"need >= 8 samples to fit an ellipse, got {len(t)}")

    k = max(1, int(round(SMOOTH_FRACTION * len(t))))
    if k > 1:
        smooth = uniform_filter1d(t.real, k, mode="nearest") + 1j * uniform_filter1d(
            t.imag, k, mode="nearest"
        )
    else:
        smooth = t
    pts = np.column_stack([smooth.real, smooth.imag])
    mean = pts.mean(axis=0)
    centered = pts - mean
    scale = float(np.sqrt((centered**2).sum(axis=1).mean()))
    if scale < 1e-12 * (1.0 + float(np.abs(mean).max())):
        raise EllipseFitError("zero spread: all samples coincide")

    # collinear scatter has no curvature to place a center on
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals[1] < 1e-9 * svals[0]:
        raise EllipseFitError("collinear scatter: arc has no curvature")

    xy = centered / scale
    conic = _fit_conic(xy)
    fit = None
    if conic is not None:
        fit = _conic_to_ellipse(conic, xy)
    if fit is None or fit.a / fit.b > MAX_AXIS_RATIO:
        fit = _fit_circle(xy)
    if fit.residual > MAX_RELATIVE_RESIDUAL:
        raise EllipseFitError(
            f"relative fit residual {fit.residual:.3f} exceeds "
            f"{MAX_RELATIVE_RESIDUAL}: scatter is not arc-like"
        )

    # undo normalization
    cx = fit.center[0] * scale + mean[0]
    cy = fit.center[1] * scale + mean[1]
    fit = EllipseFit(
        center=(cx, cy),
        a=fit.a * scale,
        b=fit.b * scale,
        theta=fit.theta,
        residual=fit.residual,
        method=fit.method,
    )

    w = np.unwrap(np.angle(t - (cx + 1j * cy)))
    return fit, w


def _fit_conic(xy: np.ndarray):
    """Direct least-squares conic fit constrained to ellipses.

    Stable split-design formulation: quadratic part D1 = [x^2, xy, y^2],
    linear part D2 = [x, y, 1]; the ellipse constraint 4ac - b^2 = 1 is
    enforced through the eigenproblem of the reduced scatter matrix.
    Returns (a, b, c, d, e, f) or None when no elliptic solution exists.
    """
    x, y = xy[:, 0], xy[:, 1]
    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        return None
    m = s1 + s2 @ t
    m = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    try:
        eigval, eigvec = np.linalg.eig(m)
    except np.linalg.LinAlgError:
        return None
    # eig of the real non-symmetric matrix may come back complex; only
    # an (effectively) real eigenvector can satisfy the ellipse constraint
    real_ok = np.abs(eigval.imag) < 1e-9 * (np.abs(eigval.real) + 1.0)
    v = eigvec.real
    cond = 4.0 * v[0] * v[2] - v[1] ** 2
    ok = np.flatnonzero(real_ok & (cond > 0))
    if len(ok) == 0:
        return None
    a1 = v[:, ok[0]]
    return np.concatenate([a1, t @ a1])


def _conic_to_ellipse(conic: np.ndarray, xy: np.ndarray):
    """Axis form of a general conic, or None when not a finite ellipse."""
    a, b, c, d, e, f = (float(v) for v in conic)
    disc = 4.0 * a * c - b * b
    if disc <= 0:
        return None
    x0 = (b * e - 2.0 * c * d) / disc
    y0 = (b * d - 2.0 * a * e) / disc

    # eigenvalues of [[a, b/2], [b/2, c]] give the axis scale factors
    half = 0.5 * (a + c)
    diff = np.hypot(0.5 * (a - c), 0.5 * b)
    lam1, lam2 = half - diff, half + diff
    # conic value at the center is negative inside a real ellipse
    val = a * x0 * x0 + b * x0 * y0 + c * y0 * y0 + d * x0 + e * y0 + f
    if lam1 <= 0 or lam2 <= 0 or val >= 0:
        return None
    a_ax = float(np.sqrt(-val / lam1))
    b_ax = float(np.sqrt(-val / lam2))
    theta = 0.5 * float(np.arctan2(b, a - c))
    res = _sampson_residual(conic, xy, (x0, y0))
    return EllipseFit(
        center=(x0, y0), a=a_ax, b=b_ax, theta=theta, residual=res, method="ellipse"
    )


def _sampson_residual(conic: np.ndarray, xy: np.ndarray, center) -> float:
    """RMS first-order geometric distance, relative to the mean radius."""
    a, b, c, d, e, f = (float(v) for v in conic)
    x, y = xy[:, 0], xy[:, 1]
    q = a * x * x + b * x * y + c * y * y + d * x + e * y + f
    gx = 2.0 * a * x + b * y + d
    gy = b * x + 2.0 * c * y + e
    grad = np.hypot(gx, gy)
    grad = np.where(grad < 1e-12, 1e-12, grad)
    dist = np.abs(q) / grad
    radius = float(np.hypot(x - center[0], y - center[1]).mean())
    if radius < 1e-12:
        return float("inf")
    return float(np.sqrt((dist**2).mean()) / radius)


def _fit_circle(xy: np.ndarray) -> EllipseFit:
    """Algebraic circle fit, the stable fallback for near-circular arcs."""
    x, y = xy[:, 0], xy[:, 1]
    lhs = np.column_stack([2.0 * x, 2.0 * y, np.ones_like(x)])
    rhs = x * x + y * y
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    x0, y0, csq = (float(v) for v in sol)
    r2 = csq + x0 * x0 + y0 * y0
    if r2 <= 0:
        raise EllipseFitError("circle fit collapsed to a point")
    r = float(np.sqrt(r2))
    dist = np.hypot(x - x0, y - y0)
    res = float(np.sqrt(((dist - r) ** 2).mean()) / r)
    return EllipseFit(center=(x0, y0), a=r, b=r, theta=0.0, residual=res, method="circle")
