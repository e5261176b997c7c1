"""Curve post-processing: local-linear smoothing, saturation times, grid correlation."""

from __future__ import annotations

from typing import Sequence

import numpy as np

SMOOTHING_WINDOW = 11
SATURATION_RTOL = 0.05
# a plateau must cover at least this fraction of the sampled horizon
MIN_PLATEAU_FRACTION = 0.2
NOT_SATURATED = "none"


def smooth_curve(values: Sequence[float], window: int = SMOOTHING_WINDOW, order: int = 1
                 ) -> np.ndarray:
    """Savitzky-Golay style least-squares polynomial smoothing.

    Each point is replaced by the value at that point of a degree-``order`` fit
    over the ``window`` samples centred on it. Near the ends the window is
    truncated to the samples that exist rather than padded.
    """
    y = np.asarray(values, dtype=float)
    if window % 2 == 0 or window < 3:
        raise ValueError("window must be odd and >= 3")
    if window > len(y):
        raise ValueError("window longer than the series")
    if order < 0 or order >= window:
        raise ValueError("order must lie in [0, window)")
    half = window // 2
    out = np.empty_like(y)
    for i in range(len(y)):
        lo, hi = max(0, i - half), min(len(y), i + half + 1)
        x = np.arange(lo, hi) - i
        deg = min(order, hi - lo - 1)
        # evaluating at x = 0 picks the constant coefficient
        coef = np.polynomial.polynomial.polyfit(x, y[lo:hi], deg)
        out[i] = coef[0]
    return out


def _smoothed(values: np.ndarray, window: int | None) -> np.ndarray:
    if window is None:
        return values
    w = min(window, len(values) if len(values) % 2 else len(values) - 1)
    return smooth_curve(values, w) if w >= 3 else values


def _tail(t: np.ndarray, fraction: float) -> np.ndarray:
    return t >= t[-1] - fraction * (t[-1] - t[0])


def saturation_detect(times: Sequence[float], values: Sequence[float],
                      rel_tol: float = SATURATION_RTOL, window: int | None = SMOOTHING_WINDOW,
                      min_fraction: float = MIN_PLATEAU_FRACTION) -> float | str:
    """Smallest time after which the smoothed curve stays near its plateau.

    The plateau is the mean of the smoothed curve over the last
    ``min_fraction`` of the horizon, and "near" means within ``rel_tol`` of
    the curve's total excursion (max - min), i.e. the usual settling-time
    band. Returns ``"none"`` when the settled stretch covers less than
    ``min_fraction`` of the horizon, as for a curve that is still growing.
    ``window=None`` skips smoothing; the window shrinks to fit short curves.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and values differ in length")
    if len(t) < 5:
        raise ValueError("need at least 5 points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    y = _smoothed(y, window)
    plateau = y[_tail(t, min_fraction)].mean()
    span = y.max() - y.min()
    if span == 0:
        return float(t[0])
    outside = np.abs(y - plateau) > rel_tol * span
    idx = 0 if not outside.any() else int(np.nonzero(outside)[0][-1]) + 1
    if idx >= len(t) or (t[-1] - t[idx]) < min_fraction * (t[-1] - t[0]):
        return NOT_SATURATED
    return float(t[idx])


def correlation_report(grid_a, grid_b) -> float:
    """Pearson correlation of two equally shaped grids, flattened."""
    a = np.asarray(grid_a, dtype=float)
    b = np.asarray(grid_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("grids have different shapes")
    a = a.ravel() - a.mean()
    b = b.ravel() - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den == 0:
        raise ValueError("correlation undefined for a constant grid")
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


def plateau_value(times: Sequence[float], values: Sequence[float], t_sat: float | str,
                  window: int | None = SMOOTHING_WINDOW,
                  min_fraction: float = MIN_PLATEAU_FRACTION) -> float:
    """Mean of the smoothed curve from ``t_sat`` on (the final stretch if unsaturated)."""
    t = np.asarray(times, dtype=float)
    y = _smoothed(np.asarray(values, dtype=float), window)
    if t_sat == NOT_SATURATED:
        return float(y[_tail(t, min_fraction)].mean())
    return float(y[t >= t_sat].mean())
