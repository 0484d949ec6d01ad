"""Magnetic line tracing: ``dγ/ds = b(γ(s))``."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from ..spectral import SpectralField
from .evaluation import make_evaluator


class TracerError(RuntimeError):
    """Integrator step size underflow, typically near a degenerate null."""


@dataclass
class FieldLine:
    seed: np.ndarray
    s: np.ndarray
    points: np.ndarray
    unwrapped: np.ndarray
    arc_length: np.ndarray
    termination: str

    def ode_residual(self, field: Callable[[np.ndarray], np.ndarray], dense=None) -> float:
        """Max of ``|γ' - b(γ)|`` using centred differences of the dense solution."""
        if dense is None:
            dense = self._dense
        if len(self.s) < 2:
            return 0.0
        h = 1e-6 * max(1.0, float(self.s[-1] - self.s[0]))
        s = np.clip(self.s, self.s[0] + h, self.s[-1] - h)
        deriv = (dense(s + h) - dense(s - h))[:3].T / (2 * h)
        return float(np.max(np.linalg.norm(deriv - field(dense(s)[:3].T), axis=1)))


def _as_callable(b, box_length):
    if isinstance(b, SpectralField):
        ev = make_evaluator(b.grid, b.coeffs)
        return ev, b.grid.box_length, float(np.sqrt(np.sum(b.real**2, axis=0)).max())
    return b, box_length, None


def trace_field_line(b, seed, s_max: float, tol: float = 1e-9, box_length: float | None = None,
                     null_tol: float = 1e-6, n_samples: int | None = None, max_step: float = np.inf,
                     method: str = "RK45") -> FieldLine:
    """Integrate a magnetic line with an adaptive embedded Runge-Kutta pair.

    ``b`` is a 3-D SpectralField or a callable mapping ``(m, 3)`` points to
    ``(m, 3)`` values.  Points are wrapped into the box when ``box_length``
    is known.  Stops at ``s_max``, at ``|b| < null_tol * scale``, or on
    divergence of the solution.
    """
    fn, L, scale = _as_callable(b, box_length)
    seed = np.asarray(seed, dtype=float)
    if scale is None:
        scale = max(float(np.linalg.norm(fn(seed[None])[0])), 1.0)

    def rhs(_, y):
        f = fn(y[None, :3])[0]
        return np.append(f, np.linalg.norm(f))

    def near_null(_, y):
        return np.linalg.norm(fn(y[None, :3])[0]) - null_tol * scale

    near_null.terminal = True
    near_null.direction = -1

    def runaway(_, y):
        return 1e8 - np.linalg.norm(y[:3])

    runaway.terminal = True

    # default samples are the accepted integrator steps
    t_eval = None if n_samples is None else np.linspace(0.0, s_max, n_samples)
    sol = solve_ivp(rhs, (0.0, s_max), np.append(seed, 0.0), method=method, rtol=tol, atol=tol, t_eval=t_eval,
                    events=(near_null, runaway), dense_output=True, max_step=max_step)
    if sol.status == -1:
        raise TracerError(sol.message)
    s, pts = sol.t, sol.y.T
    reason = "length budget"
    if sol.status == 1:
        if len(sol.t_events[0]):
            reason = "null proximity"
            s = np.append(s, sol.t_events[0][0])
            pts = np.vstack([pts, sol.y_events[0][0]])
        else:
            reason = "divergence"
    arc, pts = pts[:, 3], pts[:, :3]
    wrapped = pts % L if L is not None else pts.copy()
    line = FieldLine(seed, s, wrapped, pts, arc, reason)
    line._dense = sol.sol
    return line


def write_lines_csv(path, lines: list[FieldLine]) -> Path:
    """Polylines with columns ``line_id, s, x, y, z``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["line_id", "s", "x", "y", "z"])
        for i, line in enumerate(lines):
            for s, p in zip(line.s, line.points):
                w.writerow([i, repr(float(s))] + [repr(float(c)) for c in p])
    return path
