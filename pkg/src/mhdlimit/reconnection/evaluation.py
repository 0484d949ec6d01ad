"""Off-grid evaluation of periodic fields and their Jacobians."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..spectral import Grid, SpectralField, _irfft

SPECTRAL_LIMIT = 48


class SpectralEvaluator:
    """Exact trigonometric-polynomial evaluation restricted to the dealiased modes."""

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        if grid.dim != 3:
            raise ValueError("off-grid evaluation is three-dimensional")
        n, cut = grid.n, grid.n // 3
        m_full = np.fft.fftfreq(n, 1.0 / n).astype(int)
        keep = np.nonzero(np.abs(m_full) <= cut)[0]
        keep_z = np.arange(cut + 1)
        c = coeffs[:, keep][:, :, keep][:, :, :, keep_z]
        w = np.where(keep_z == 0, 1.0, 2.0)
        self.coeffs = np.ascontiguousarray(c * w / n**3)
        self.kxy = m_full[keep] * grid.k0
        self.kz = keep_z * grid.k0
        self.components = coeffs.shape[0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ex = np.exp(1j * np.outer(pts[:, 0], self.kxy))
        ey = np.exp(1j * np.outer(pts[:, 1], self.kxy))
        ez = np.exp(1j * np.outer(pts[:, 2], self.kz))
        t = np.tensordot(self.coeffs, ez.T, axes=([3], [0]))
        t = np.einsum("cabm,mb->cam", t, ey)
        return np.einsum("cam,ma->mc", t, ex).real


class TricubicEvaluator:
    def __init__(self, grid: Grid, coeffs: np.ndarray):
        self.values = np.ascontiguousarray(_irfft(coeffs, grid))
        self.spacing = grid.spacing
        self.components = coeffs.shape[0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return kernels.tricubic_periodic(self.values, pts, self.spacing)


def make_evaluator(grid: Grid, coeffs: np.ndarray, method: str = "auto"):
    if method == "auto":
        method = "spectral" if grid.n <= SPECTRAL_LIMIT else "tricubic"
    if method == "spectral":
        return SpectralEvaluator(grid, coeffs)
    if method == "tricubic":
        return TricubicEvaluator(grid, coeffs)
    raise ValueError(f"unknown evaluation method {method!r}")


def jacobian_coeffs(f: SpectralField) -> np.ndarray:
    """Coefficients of ``∂_j f_i`` flattened to ``3*i + j``."""
    g = f.grid
    return np.concatenate([np.stack([1j * kk * f.coeffs[i] for kk in g.k]) for i in range(3)])


class FieldProbe:
    """Point values and Jacobians of a vector field."""

    def __init__(self, b: SpectralField, method: str = "auto"):
        if not (b.grid.dim == 3 and b.components == 3):
            raise ValueError("expected a 3-D vector field")
        self.grid = b.grid
        self.values = b.real
        jc = jacobian_coeffs(b)
        self.value = make_evaluator(b.grid, b.coeffs, method)
        self.jac = make_evaluator(b.grid, jc, method)
        self.sup = float(np.sqrt(np.sum(b.real**2, axis=0)).max())
        self.grad_sup = float(np.abs(_irfft(jc, b.grid)).max())
        # cheap interpolants for batched screening
        self.fast_value = TricubicEvaluator(b.grid, b.coeffs)
        self.fast_jac = TricubicEvaluator(b.grid, jc)

    def __call__(self, points):
        return self.value(points)

    def jacobian(self, points) -> np.ndarray:
        return self.jac(points).reshape(-1, 3, 3)
