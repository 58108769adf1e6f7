"""Trend extraction for observable time series.

Nadaraya-Watson kernel smoothing, windowed least-squares line fits with the
Pearson correlation coefficient, level-crossing detection, and the automatic
choice of the post-impact fit window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SmoothingSpec", "RegressionResult", "kernel_smooth",
           "linear_fit", "crossing_time", "detect_post_impact_window"]

KERNELS = ("epanechnikov", "gaussian", "moving_average")


@dataclass(frozen=True)
class SmoothingSpec:
    kernel: str = "epanechnikov"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel '{self.kernel}', expected one of {KERNELS}")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def _kernel_weights(kernel: str, u: np.ndarray) -> np.ndarray:
    if kernel == "epanechnikov":
        return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)
    if kernel == "gaussian":
        return np.exp(-0.5 * u * u)
    return (np.abs(u) <= 1.0).astype(float)  # moving average


def kernel_smooth(t, y, spec: SmoothingSpec) -> np.ndarray:
    """Nadaraya-Watson weighted average of y at every sample time.

    y_smooth_i = sum_j K((t_j - t_i)/bw) y_j / sum_j K(...).  The bandwidth
    must cover at least two sample spacings, otherwise smoothing is a no-op
    and the request is rejected.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("t and y must be 1D arrays of equal length")
    if len(t) > 1:
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ValueError("t must be strictly increasing")
        if spec.bandwidth < 2.0 * np.max(dt):
            raise ValueError(
                f"bandwidth {spec.bandwidth} too small: need at least two sample spacings "
                f"({2.0 * np.max(dt):g})")
    w = _kernel_weights(spec.kernel, (t[None, :] - t[:, None]) / spec.bandwidth)
    return (w @ y) / np.sum(w, axis=1)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r: float
    window: tuple
    n_points: int
    degenerate: bool = False


def linear_fit(t, y, window=None) -> RegressionResult:
    """Ordinary least squares y = slope * t + intercept over a time window.

    r is the Pearson correlation; a constant series is reported with
    slope 0, r 0 and the degenerate flag instead of a division by zero.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is not None:
        lo, hi = window
        mask = (t >= lo) & (t <= hi)
        t, y = t[mask], y[mask]
    else:
        window = (float(t[0]), float(t[-1])) if len(t) else (np.nan, np.nan)
    if len(np.unique(t)) < 2:
        raise ValueError("linear fit needs at least 2 distinct sample times in the window")
    tm = t.mean()
    ym = y.mean()
    st = t - tm
    sy = y - ym
    var_t = float(st @ st)
    var_y = float(sy @ sy)
    cov = float(st @ sy)
    slope = cov / var_t
    intercept = ym - slope * tm
    if var_y == 0.0:
        return RegressionResult(0.0, ym, 0.0, (float(window[0]), float(window[1])),
                                len(t), degenerate=True)
    r = cov / np.sqrt(var_t * var_y)
    return RegressionResult(slope, intercept, float(r),
                            (float(window[0]), float(window[1])), len(t))


def crossing_time(t, y, level: float):
    """First upward crossing of the level, linearly interpolated; None if none."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) == 0:
        raise ValueError("empty series")
    below = y < level
    for i in range(len(t) - 1):
        if below[i] and y[i + 1] >= level:
            frac = (level - y[i]) / (y[i + 1] - y[i])
            return float(t[i] + frac * (t[i + 1] - t[i]))
    return None


def detect_post_impact_window(t, sigma, spec: SmoothingSpec,
                              factor: float = 5.0, pre_window: float = 1.0,
                              post_margin: float = 1.0, min_points: int = 10):
    """Fit window [t_lo, t_end] starting after the impact transient.

    The impact is located from the smoothed |d sigma/dt|: the window opens at
    the first time after its global peak where the rate falls back below
    factor times the pre-impact level.  If the rate never settles (sigma
    keeps growing, as for low barriers) the window opens post_margin time
    units after the peak instead.  Series with no excursion above the
    threshold get the full range.
    """
    t = np.asarray(t, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if len(t) < max(min_points, 3):
        return float(t[0]), float(t[-1])
    smooth = kernel_smooth(t, sigma, spec)
    rate = np.abs(np.gradient(smooth, t))
    pre = rate[t <= t[0] + pre_window]
    level = float(np.max(pre)) if len(pre) else 0.0
    level = max(level, 1e-3 * float(np.max(rate)), 1e-15)
    threshold = factor * level
    exceed = rate > threshold
    if not np.any(exceed):
        return float(t[0]), float(t[-1])
    k_peak = int(np.argmax(rate))
    settled = np.nonzero(~exceed[k_peak:])[0]
    if len(settled):
        t_lo = float(t[k_peak + settled[0]])
    else:
        t_lo = float(t[k_peak]) + post_margin
    # keep enough samples to fit on
    if np.count_nonzero(t >= t_lo) < min_points:
        t_lo = float(t[max(0, len(t) - min_points)])
    return t_lo, float(t[-1])
