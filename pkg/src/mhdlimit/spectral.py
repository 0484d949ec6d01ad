"""Fourier pseudo-spectral discretization on the periodic box [0, L)^d.

Conventions
-----------
Real fields are stored as ``rfftn`` coefficients over the last ``dim`` axes,
with a leading component axis (length 1 for scalars, ``dim`` for vectors).
The forward transform is unnormalized and the inverse carries ``1/n**dim``,
so a constant field ``c`` has zero-mode coefficient ``c * n**dim``.  Every
norm in the package goes through :func:`l2_norm` or real-space quadrature
and accounts for this in one place.

Homogeneous operators (``(-Δ)^{-1}``, the Leray projector ``Q``, dyadic
blocks) act as zero on the ``k = 0`` mode.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "BandLimitError",
    "MeanProjectedWarning",
    "fft_forward",
    "fft_inverse",
    "gradient",
    "divergence",
    "curl",
    "laplacian",
    "leray_P",
    "leray_Q",
    "diffusion_semigroup",
    "inverse_laplacian_gradient",
    "dealias",
    "product",
    "l2_norm",
    "l2_norm_real",
]


class BandLimitError(ValueError):
    """Backward heat flow requested on a field with energy above the cutoff."""


class MeanProjectedWarning(UserWarning):
    """A nonzero mean was silently removed by a homogeneous operator."""


def _fft_friendly(n: int) -> bool:
    if n < 8 or n % 2:
        return False
    for p in (2, 3, 5):
        while n % p == 0:
            n //= p
    return n == 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per direction."""

    dim: int
    n: int
    box_length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not _fft_friendly(self.n):
            raise ValueError(f"n must be even, >= 8 and have no prime factors beyond 5, got {self.n}")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def k0(self) -> float:
        """Fundamental wavenumber 2π/L."""
        return 2 * np.pi / self.box_length

    @cached_property
    def modes(self) -> tuple[np.ndarray, ...]:
        """Integer mode numbers per axis, broadcastable to ``spectral_shape``."""
        out = []
        for ax in range(self.dim):
            if ax == self.dim - 1:
                m = np.arange(self.n // 2 + 1, dtype=float)
            else:
                m = np.fft.fftfreq(self.n, 1.0 / self.n)
            shape = [1] * self.dim
            shape[ax] = m.size
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Wavenumber components ``(2π/L) m`` with the Nyquist entries zeroed.

        Zeroing the Nyquist wavenumber keeps odd-order derivatives of real
        fields real.
        """
        out = []
        for m in self.modes:
            kk = self.k0 * m
            kk = np.where(np.abs(m) == self.n // 2, 0.0, kk)
            out.append(kk)
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 including the Nyquist entries (used by diffusion)."""
        return sum((self.k0 * m) ** 2 for m in self.modes) + np.zeros(self.spectral_shape)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """1/|k|^2 with the zero mode mapped to 0."""
        with np.errstate(divide="ignore"):
            out = np.where(self.k2 > 0, 1.0 / np.where(self.k2 > 0, self.k2, 1.0), 0.0)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule (every ``|m_i| <= n/3``)."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for m in self.modes:
            keep = keep & (np.abs(m) <= self.n / 3)
        return keep

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each stored rfft mode in the full spectrum."""
        m_last = self.modes[-1]
        w = np.where((m_last == 0) | (m_last == self.n // 2), 1.0, 2.0)
        return np.broadcast_to(w, self.spectral_shape)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Grid point coordinates with ``indexing='ij'``."""
        x = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))


class SpectralField:
    """Real scalar or vector field held as rfft coefficients.

    ``coeffs`` has shape ``(components, *grid.spectral_shape)``.  The
    real-space mirror is computed lazily and cached.
    """

    __slots__ = ("grid", "coeffs", "_real")

    def __init__(self, grid: Grid, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape == grid.spectral_shape:
            coeffs = coeffs[None]
        if coeffs.shape[1:] != grid.spectral_shape:
            raise ValueError(
                f"coefficient shape {coeffs.shape} does not match grid {grid.spectral_shape}"
            )
        if coeffs.shape[0] not in (1, grid.dim):
            raise ValueError(f"expected 1 or {grid.dim} components, got {coeffs.shape[0]}")
        self.grid = grid
        self.coeffs = coeffs
        self._real = None

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.components == self.grid.dim and self.components > 1

    @property
    def real(self) -> np.ndarray:
        """Real-space values, shape ``(components, *grid.shape)``."""
        if self._real is None:
            self._real = _irfft(self.coeffs, self.grid)
        return self._real

    def copy(self) -> SpectralField:
        return SpectralField(self.grid, self.coeffs.copy())

    def _check(self, other: SpectralField):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        if other.components != self.components:
            raise ValueError("component count mismatch")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return SpectralField(self.grid, self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        kind = "vector" if self.is_vector else "scalar"
        return f"SpectralField({kind}, dim={self.grid.dim}, n={self.grid.n})"


def _axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(-grid.dim, 0))


def _rfft(values: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.rfftn(values, axes=_axes(grid))


def _irfft(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.irfftn(coeffs, s=grid.shape, axes=_axes(grid))


def fft_forward(values: np.ndarray, grid: Grid) -> SpectralField:
    """Transform real-space values of shape ``grid.shape`` or ``(c, *grid.shape)``."""
    values = np.asarray(values, dtype=float)
    if values.shape == grid.shape:
        values = values[None]
    if values.shape[1:] != grid.shape:
        raise ValueError(f"array shape {values.shape} does not match grid shape {grid.shape}")
    return SpectralField(grid, _rfft(values, grid))


def fft_inverse(field: SpectralField) -> np.ndarray:
    """Real-space values; scalars come back without the component axis."""
    out = field.real
    return out[0] if field.components == 1 else out


def gradient(f: SpectralField) -> SpectralField:
    if f.components != 1:
        raise ValueError("gradient expects a scalar field")
    g = f.grid
    return SpectralField(g, np.stack([1j * kk * f.coeffs[0] for kk in g.k]))


def divergence(v: SpectralField) -> SpectralField:
    if not v.is_vector:
        raise ValueError("divergence expects a vector field")
    g = v.grid
    return SpectralField(g, sum(1j * kk * c for kk, c in zip(g.k, v.coeffs)))


def curl(v: SpectralField) -> SpectralField:
    """Curl of a vector field: vector in 3-D, scalar vorticity in 2-D."""
    g = v.grid
    if g.dim not in (2, 3):
        raise ValueError("curl is defined only in 2 or 3 dimensions")
    if not v.is_vector:
        raise ValueError("curl expects a vector field")
    c = v.coeffs
    if g.dim == 2:
        kx, ky = g.k
        return SpectralField(g, 1j * (kx * c[1] - ky * c[0]))
    kx, ky, kz = g.k
    return SpectralField(
        g,
        np.stack(
            [
                1j * (ky * c[2] - kz * c[1]),
                1j * (kz * c[0] - kx * c[2]),
                1j * (kx * c[1] - ky * c[0]),
            ]
        ),
    )


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def _k_dot(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return sum(kk * c for kk, c in zip(grid.k, coeffs))


def leray_Q(v: SpectralField) -> SpectralField:
    """Gradient part ``-(-Δ)^{-1} ∇ div v``; zero on the mean."""
    if not v.is_vector:
        raise ValueError("Leray projection expects a vector field")
    g = v.grid
    kdv = _k_dot(g, v.coeffs) * g.inv_k2
    return SpectralField(g, np.stack([kk * kdv for kk in g.k]))


def leray_P(v: SpectralField) -> SpectralField:
    """Divergence-free part ``v - Q v`` (keeps the mean)."""
    return SpectralField(v.grid, v.coeffs - leray_Q(v).coeffs)


def diffusion_semigroup(f: SpectralField, kappa: float, t: float) -> SpectralField:
    """Apply ``exp(kappa t Δ)``.

    A negative ``kappa * t`` is the backward heat flow ``exp(-|kappa t| Δ)``;
    it is accepted only for fields whose spectrum lies inside the 2/3
    dealiasing band, otherwise :class:`BandLimitError` is raised.
    """
    g = f.grid
    s = kappa * t
    if s == 0:
        return f.copy()
    if s < 0:
        outside = f.coeffs[:, ~g.dealias_mask]
        scale = max(np.abs(f.coeffs).max(), np.finfo(float).tiny)
        if outside.size and np.abs(outside).max() > 1e-13 * scale:
            raise BandLimitError(
                "backward diffusion needs a band-limited field (energy above the 2/3 cutoff)"
            )
        return SpectralField(g, np.where(g.dealias_mask, np.exp(-s * g.k2), 0.0) * f.coeffs)
    return SpectralField(g, np.exp(-s * g.k2) * f.coeffs)


def inverse_laplacian_gradient(a: SpectralField) -> SpectralField:
    """``(-Δ)^{-1} ∇ a``: mode k maps to ``i k / |k|^2 â``.

    Satisfies ``div(out) = -a`` for mean-free ``a``; for ``a = cos x`` the
    result is ``-sin x e_1``.  A nonzero mean is dropped with a
    :class:`MeanProjectedWarning`.
    """
    if a.components != 1:
        raise ValueError("expects a scalar field")
    g = a.grid
    c0 = a.coeffs[(0,) + (0,) * g.dim]
    if abs(c0) > 1e-12 * max(np.abs(a.coeffs).max(), 1e-300) and abs(c0) > 0:
        warnings.warn("nonzero mean projected out of (-Δ)^{-1}∇a", MeanProjectedWarning, stacklevel=2)
    return SpectralField(g, np.stack([1j * kk * g.inv_k2 * a.coeffs[0] for kk in g.k]))


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Dealiased pseudo-spectral pointwise product.

    Scalar times scalar or scalar times vector; returns the rank of the
    higher-rank factor.
    """
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    if f.components != 1 and g.components != 1 and f.components != g.components:
        raise ValueError("incompatible component counts")
    vals = f.real * g.real
    return SpectralField(f.grid, _rfft(vals, f.grid) * f.grid.dealias_mask)


def l2_norm(f: SpectralField) -> float:
    """L² norm over the box from the coefficients (Parseval)."""
    g = f.grid
    s = float(np.sum(g.rfft_weights * np.abs(f.coeffs) ** 2))
    return np.sqrt(s * g.box_length**g.dim) / g.n**g.dim


def l2_norm_real(values: np.ndarray, grid: Grid) -> float:
    """L² norm by uniform-cell quadrature of real-space values."""
    return float(np.sqrt(np.sum(np.asarray(values) ** 2) * grid.cell_volume))
