"""Log-log regression and refinement diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SlopeFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    max_residual: float

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_loglog(x, y, min_points: int = 4) -> SlopeFit:
    """Least-squares line through ``(log x, log y)``; residuals in natural-log units."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < min_points:
        raise ValueError(f"slope fits need at least {min_points} points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return SlopeFit(list(zip(lx.tolist(), ly.tolist())), float(slope), float(intercept),
                    float(np.max(np.abs(resid))))


def convergence_orders(h, err) -> np.ndarray:
    """Observed orders ``log(e_i/e_{i+1}) / log(h_i/h_{i+1})`` between consecutive levels."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    return np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])


def relative_change(coarse: float, fine: float) -> float:
    """``|fine - coarse| / |fine|``."""
    return abs(fine - coarse) / abs(fine)
