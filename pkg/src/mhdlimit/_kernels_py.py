"""Pure numpy versions of the compiled kernels."""
from __future__ import annotations

import numpy as np


def _lagrange_weights(t: np.ndarray) -> np.ndarray:
    # 4-point Lagrange weights for nodes -1, 0, 1, 2 at offset t in [0, 1)
    return np.stack([
        -t * (t - 1) * (t - 2) / 6,
        (t + 1) * (t - 1) * (t - 2) / 2,
        -(t + 1) * t * (t - 2) / 2,
        (t + 1) * t * (t - 1) / 6,
    ], axis=-1)


def tricubic_periodic(values: np.ndarray, points: np.ndarray, spacing: float) -> np.ndarray:
    """Interpolate ``values[c, i, j, k]`` at ``points[m, 3]`` on a periodic grid.

    Returns an ``(m, c)`` array.
    """
    values = np.ascontiguousarray(values, dtype=float)
    pts = np.asarray(points, dtype=float) / spacing
    n = values.shape[1:]
    base = np.floor(pts).astype(np.int64)
    w = _lagrange_weights(pts - base)  # (m, 3, 4)
    out = np.zeros((pts.shape[0], values.shape[0]))
    offs = np.arange(-1, 3)
    ix = (base[:, 0, None] + offs) % n[0]
    iy = (base[:, 1, None] + offs) % n[1]
    iz = (base[:, 2, None] + offs) % n[2]
    for a in range(4):
        for b in range(4):
            wab = w[:, 0, a] * w[:, 1, b]
            for c in range(4):
                out += (wab * w[:, 2, c])[:, None] * values[:, ix[:, a], iy[:, b], iz[:, c]].T
    return out


def sign_change_cells(values: np.ndarray) -> np.ndarray:
    """Indices ``(i, j, k)`` of periodic cells whose 8 corners show a sign change in every component."""
    ok = None
    for comp in values:
        pos = np.zeros(comp.shape, dtype=bool)
        neg = np.zeros(comp.shape, dtype=bool)
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    s = np.roll(comp, (-dx, -dy, -dz), axis=(0, 1, 2))
                    pos |= s > 0
                    neg |= s < 0
        both = pos & neg
        ok = both if ok is None else ok & both
    return np.argwhere(ok).astype(np.int64)
