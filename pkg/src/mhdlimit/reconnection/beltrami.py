"""ABC Beltrami fields."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spectral import Grid, SpectralField, fft_forward


@dataclass(frozen=True)
class BeltramiSpec:
    A: float = 1.0
    B: float = 1.0
    C: float = 1.0
    N: int = 1
    family: str = "ABC"

    def __post_init__(self):
        if self.family != "ABC":
            raise ValueError(f"unsupported Beltrami family {self.family!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("frequency N must be a positive integer")


def abc_beltrami(spec: BeltramiSpec, grid: Grid) -> SpectralField:
    """``(A sin Nz + C cos Ny, B sin Nx + A cos Nz, C sin Ny + B cos Nx)``, an eigenfield of curl with eigenvalue N.

    ``N`` is measured in units of the fundamental wavenumber ``2π/L``.
    """
    if grid.dim != 3:
        raise ValueError("ABC fields are three-dimensional")
    if spec.N > grid.n // 3:
        raise ValueError(f"N={spec.N} exceeds the dealiased band n/3={grid.n // 3}")
    x, y, z = (c * grid.k0 * spec.N for c in grid.coordinates())
    A, B, C = spec.A, spec.B, spec.C
    vals = np.stack([
        A * np.sin(z) + C * np.cos(y),
        B * np.sin(x) + A * np.cos(z),
        C * np.sin(y) + B * np.cos(x),
    ])
    return fft_forward(vals, grid)
