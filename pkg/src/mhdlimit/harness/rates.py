"""Log-log rate fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateFit:
    nu: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    intercept: float
    residual: float
    target: float | None = None

    def within(self, lo: float, hi: float) -> bool:
        return lo <= self.slope <= hi


def fit_rate(samples, target: float | None = None) -> RateFit:
    """Least squares of ``log e = slope * log nu + intercept``; residual is the RMS of log residuals."""
    pairs = [(float(n), float(e)) for n, e in samples]
    if len(pairs) < 2:
        raise ValueError("need at least two samples")
    nu = np.array([p[0] for p in pairs])
    err = np.array([p[1] for p in pairs])
    if np.any(nu <= 0):
        raise ValueError("nu values must be positive")
    if np.any(err <= 0):
        raise ValueError("error values must be positive")
    x, y = np.log(nu), np.log(err)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - A @ np.array([slope, intercept])) ** 2)))
    return RateFit(tuple(nu), tuple(err), float(slope), float(intercept), resid, target)
