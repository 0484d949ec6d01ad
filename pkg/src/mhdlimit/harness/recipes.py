"""Initial-data recipes returning ``(a0, v0, b0)``."""
from __future__ import annotations

import numpy as np

from ..dynamics import PhysicalParams
from ..spectral import Grid, SpectralField, fft_forward, leray_P


def _zeros(grid: Grid, comps: int) -> SpectralField:
    return SpectralField(grid, np.zeros((comps,) + grid.spectral_shape, dtype=complex))


def orszag_tang(grid: Grid, amplitude: float = 1.0, magnetic: float = 1.0):
    """``v = (-sin y, sin x)``, ``b = (-sin y, sin 2x)``."""
    if grid.dim != 2:
        raise ValueError("orszag-tang is two-dimensional")
    x, y = (c * grid.k0 for c in grid.coordinates())
    v = fft_forward(amplitude * np.stack([-np.sin(y), np.sin(x)]), grid)
    b = fft_forward(magnetic * np.stack([-np.sin(y), np.sin(2 * x)]), grid)
    return _zeros(grid, 1), v, b


def taylor_green(grid: Grid, amplitude: float = 1.0, magnetic: float = 0.1):
    """Taylor-Green vortex plus one magnetic shear mode."""
    c = [q * grid.k0 for q in grid.coordinates()]
    if grid.dim == 2:
        x, y = c
        v = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
        b = np.stack([np.sin(2 * y), np.zeros_like(x)])
    else:
        x, y, z = c
        v = np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), np.zeros_like(x)])
        b = np.stack([np.sin(2 * y), np.zeros_like(x), np.sin(x)])
    return _zeros(grid, 1), fft_forward(amplitude * v, grid), fft_forward(magnetic * b, grid)


def zero(grid: Grid):
    return _zeros(grid, 1), _zeros(grid, grid.dim), _zeros(grid, grid.dim)


def constant(grid: Grid, velocity=None, field=None):
    """Uniform velocity and magnetic field; defaults to the first unit vector for b."""
    v = np.asarray(velocity if velocity is not None else [0.0] * grid.dim, dtype=float)
    b = np.asarray(field if field is not None else [1.0] + [0.0] * (grid.dim - 1), dtype=float)
    if v.shape != (grid.dim,) or b.shape != (grid.dim,):
        raise ValueError("constant vectors must have dim entries")
    ones = np.ones(grid.shape)
    return (_zeros(grid, 1), fft_forward(np.stack([c * ones for c in v]), grid),
            fft_forward(np.stack([c * ones for c in b]), grid))


def reconnection(grid: Grid, params: PhysicalParams, **kw):
    from ..reconnection.data import ReconnectionData, build_reconnection_data

    if "abc" in kw:
        kw["abc"] = tuple(kw["abc"])
    V0, B0 = build_reconnection_data(ReconnectionData(**kw), grid, params)
    return _zeros(grid, 1), V0, B0


RECIPES = {
    "orszag-tang": orszag_tang,
    "taylor-green": taylor_green,
    "zero": zero,
    "constant": constant,
    "reconnection": reconnection,
}


def build_initial(name: str, grid: Grid, params: PhysicalParams, **kw):
    """Dispatch to a recipe; ``density`` adds ``density * cos(x)`` to a0 when given."""
    if name not in RECIPES:
        raise ValueError(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")
    density = float(kw.pop("density", 0.0))
    fn = RECIPES[name]
    try:
        a, v, b = fn(grid, params, **kw) if name == "reconnection" else fn(grid, **kw)
    except TypeError as exc:
        raise ValueError(f"recipe {name!r}: {exc}") from None
    if density:
        x = grid.coordinates()[0] * grid.k0
        a = fft_forward((density * np.cos(x))[None], grid)
    return a, v, leray_P(b)
