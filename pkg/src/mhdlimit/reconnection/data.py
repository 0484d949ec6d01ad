"""Initial data whose magnetic field reconnects under the viscous-resistive flow.

``V0 = M curl(phi B_N)`` and ``B0 = V0 + eps e^{-eta T Δ} curl(psi W)``.  The
high-frequency Beltrami part decays like ``exp(-eta N^2 t)`` while the
perturbation, pre-compensated by the backward heat factor, relaxes to
``eps curl(psi W)`` near ``t = T``.  That field carries a hyperbolic null at
the envelope center, whereas ``B0`` has none.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..dynamics import PhysicalParams
from ..spectral import Grid, SpectralField, curl, diffusion_semigroup, fft_forward, leray_P
from .beltrami import BeltramiSpec, abc_beltrami


@dataclass(frozen=True)
class ReconnectionData:
    M: float = 0.5
    T: float = 1.0
    epsilon: float = 0.05
    N: int = 12
    abc: tuple[float, float, float] = (1.0, 0.1, 0.1)
    phi_width: float = math.pi
    psi_width: float = 1.0
    center: tuple[float, float, float] | None = None
    cutoff: float = 4.0

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("M must be nonnegative")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")


def periodic_gaussian(grid: Grid, center, width: float) -> np.ndarray:
    """``exp((sum_i cos(k0 (x_i - c_i)) - d) / (k0 width)^2)``: Gaussian of the given width near ``center``."""
    k0 = grid.k0
    s = sum(np.cos(k0 * (x - c)) for x, c in zip(grid.coordinates(), center))
    return np.exp((s - grid.dim) / (k0 * width) ** 2)


def hyperbolic_potential(grid: Grid, center) -> np.ndarray:
    """Vector potential whose curl is ``(x, y, -2z)`` to leading order about ``center``."""
    k0 = grid.k0
    sx, sy, sz = (np.sin(k0 * (x - c)) / k0 for x, c in zip(grid.coordinates(), center))
    return np.stack([sy * sz, -sx * sz, np.zeros_like(sx)])


def _lowpass(f: SpectralField, kc: float) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * (f.grid.kmag <= kc))


def perturbation(rd: ReconnectionData, grid: Grid) -> SpectralField:
    """``curl(psi W)`` band-limited to ``|k| <= cutoff``."""
    c = _center(rd, grid)
    psi = periodic_gaussian(grid, c, rd.psi_width)
    W = hyperbolic_potential(grid, c)
    return curl(_lowpass(fft_forward(psi * W, grid), rd.cutoff * grid.k0))


def _center(rd: ReconnectionData, grid: Grid):
    return rd.center if rd.center is not None else (grid.box_length / 2,) * 3


def build_reconnection_data(rd: ReconnectionData, grid: Grid, params: PhysicalParams):
    """Return ``(V0, B0)``; both divergence-free."""
    if grid.dim != 3:
        raise ValueError("reconnection data is three-dimensional")
    spec = BeltramiSpec(*rd.abc, N=rd.N)
    BN = abc_beltrami(spec, grid)
    phi = periodic_gaussian(grid, _center(rd, grid), rd.phi_width)
    V0 = curl(fft_forward(phi * BN.real, grid)) * rd.M
    if rd.epsilon == 0:
        return V0, V0.copy()
    if rd.epsilon > rd.N ** -2.0:
        warnings.warn(f"epsilon={rd.epsilon} is large compared with N^-2; near-alignment may be lost",
                      RuntimeWarning, stacklevel=2)
    pert = diffusion_semigroup(perturbation(rd, grid), params.eta, -rd.T)
    B0 = V0 + pert * rd.epsilon
    return V0, leray_P(B0)
