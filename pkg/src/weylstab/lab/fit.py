"""Power-law fits in log-log space, the discretization floor rule and bound checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NonPositiveData, TooFewPoints

FLOOR_FACTOR = 10.0
ABSOLUTE_FLOOR = 1e-12


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    log_c: float
    r_squared: float
    points: int

    @property
    def constant(self) -> float:
        return math.exp(self.log_c)

    def __call__(self, x):
        return self.constant * np.asarray(x, dtype=float) ** self.exponent

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "log_c": self.log_c, "constant": self.constant,
                "r_squared": self.r_squared, "points": self.points}


def fit_power_law(points) -> PowerLawFit:
    """Least squares of log d against log delta over ``(delta, d)`` pairs."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if pts.shape[0] < 3:
        raise TooFewPoints(f"need at least 3 points, got {pts.shape[0]}")
    if np.any(~(pts > 0)):
        raise NonPositiveData("power-law fit needs strictly positive data")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), min(1.0, max(0.0, r2)), int(pts.shape[0]))


def log_residuals(fit: PowerLawFit, x, y) -> np.ndarray:
    """log y - log(C x^nu), the quantity drawn in the residual panel of a plot."""
    return np.log(np.asarray(y, dtype=float)) - np.log(fit(x))


def above_floor(signal, error, factor: float = FLOOR_FACTOR, absolute: float = ABSOLUTE_FLOOR) -> np.ndarray:
    """Mask of rows whose signal is at least ``factor`` times the grid-doubling error.

    An absolute floor stands in for the error when the two grids agree to
    rounding.
    """
    signal = np.asarray(signal, dtype=float)
    error = np.maximum(np.asarray(error, dtype=float), absolute)
    return signal >= factor * error


@dataclass(frozen=True)
class BoundCheck:
    """d(delta) <= slack * C delta^nu with C pinned at the largest delta."""

    exponent: float
    c_hat: float
    worst_ratio: float
    slack: float
    points: int

    @property
    def passed(self) -> bool:
        return self.points == 0 or self.worst_ratio <= self.slack


def bound_check(deltas, values, exponent: float, slack: float = 1.1) -> BoundCheck:
    deltas = np.asarray(deltas, dtype=float)
    values = np.asarray(values, dtype=float)
    if deltas.size == 0:
        return BoundCheck(exponent, math.nan, 0.0, slack, 0)
    i = int(np.argmax(deltas))
    c_hat = values[i] / deltas[i] ** exponent
    if c_hat <= 0:
        raise NonPositiveData("bound constant is not positive")
    ratios = values / (c_hat * deltas**exponent)
    return BoundCheck(exponent, float(c_hat), float(np.max(ratios)), slack, int(deltas.size))
