"""Right-hand sides and time stepping for compressible and incompressible MHD.

Compressible unknowns are ``(a, v, b)`` with density ``rho = 1 + a``::

    a_t = -div((1 + a) v)
    v_t = [mu Δv + (lam + mu) ∇div v - ∇P(rho) + b·∇b - ∇|b|²/2] / rho - v·∇v
    b_t = -b div v - v·∇b + b·∇v + eta Δb

Incompressible unknowns are ``(V, B)`` with the pressure removed by the
Leray projector.  Every product is a dealiased pseudo-spectral product;
cubic terms are two successive dealiased products.

Time stepping is second-order exponential time differencing (ETD2RK).  The
diagonal linear part (``mu|k|^2`` on the solenoidal part of v, ``nu|k|^2``
on its gradient part, ``eta|k|^2`` on b) is integrated exactly; the rest of
the right-hand side is advanced by the two-stage Cox-Matthews rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .spectral import Grid, SpectralField, _irfft, _rfft, l2_norm, leray_P

CFL_NUMBER = 0.4
MAX_RETRIES = 6


class DensityFloorError(ArithmeticError):
    """Density dropped below the configured floor."""


class CFLViolation(ValueError):
    """Requested time step exceeds the advective CFL bound."""


class NumericalFailure(RuntimeError):
    """Step could not be completed after the allowed dt halvings."""


@dataclass(frozen=True)
class PhysicalParams:
    """Transport coefficients and pressure law ``P = A rho^gamma``.

    ``A`` defaults to ``1/gamma`` so that ``P'(1) = 1``.
    """

    mu: float
    lam: float = 0.0
    eta: float = 0.0
    gamma: float = 1.4
    A: float | None = None
    density_floor: float = 1e-3

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.nu > 0:
            raise ValueError("nu = lam + 2 mu must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if self.A is not None and not self.A > 0:
            raise ValueError("A must be positive")

    @property
    def nu(self) -> float:
        return self.lam + 2.0 * self.mu

    @property
    def pressure_amplitude(self) -> float:
        return 1.0 / self.gamma if self.A is None else self.A


@dataclass
class CompressibleState:
    time: float
    a: SpectralField
    v: SpectralField
    b: SpectralField

    @property
    def grid(self) -> Grid:
        return self.a.grid

    @property
    def rho(self) -> np.ndarray:
        return 1.0 + self.a.real[0]


@dataclass
class IncompressibleState:
    time: float
    V: SpectralField
    B: SpectralField

    @property
    def grid(self) -> Grid:
        return self.V.grid


# ---------------------------------------------------------------- pressure --


def pressure(rho: np.ndarray | SpectralField, params: PhysicalParams, grid: Grid | None = None) -> SpectralField:
    """``A rho^gamma`` evaluated pointwise, returned dealiased."""
    if isinstance(rho, SpectralField):
        grid = rho.grid
        rho = rho.real[0]
    rho = np.asarray(rho, dtype=float)
    if rho.min() < params.density_floor:
        raise DensityFloorError(f"density {rho.min():.3e} below floor {params.density_floor}")
    vals = params.pressure_amplitude * rho**params.gamma
    return SpectralField(grid, _rfft(vals, grid) * grid.dealias_mask)


def k_of_a(a: np.ndarray | SpectralField, params: PhysicalParams, grid: Grid | None = None) -> SpectralField:
    """``P'(1 + a) - 1``, pointwise then dealiased."""
    if isinstance(a, SpectralField):
        grid = a.grid
        a = a.real[0]
    rho = 1.0 + np.asarray(a, dtype=float)
    if rho.min() < params.density_floor:
        raise DensityFloorError(f"density {rho.min():.3e} below floor {params.density_floor}")
    A, gam = params.pressure_amplitude, params.gamma
    vals = A * gam * rho ** (gam - 1.0) - 1.0
    return SpectralField(grid, _rfft(vals, grid) * grid.dealias_mask)


# --------------------------------------------------------------- kernels ----


def _D(vals: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward transform + 2/3 truncation of real values."""
    return _rfft(vals, grid) * grid.dealias_mask


def _grad_real(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """``out[i, j] = ∂_j f_i`` in real space for a (c, *spec) coefficient array."""
    c = coeffs.shape[0]
    spec = np.empty((c, grid.dim) + grid.spectral_shape, dtype=complex)
    for j, kk in enumerate(grid.k):
        spec[:, j] = 1j * kk * coeffs
    return _irfft(spec, grid)


def _advect(u: np.ndarray, grad_f: np.ndarray) -> np.ndarray:
    """``(u·∇) f`` from real velocity ``u[j]`` and gradient ``grad_f[i, j]``."""
    return np.einsum("j...,ij...->i...", u, grad_f)


def _project(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    kdv = sum(kk * c for kk, c in zip(grid.k, coeffs)) * grid.inv_k2
    return coeffs - np.stack([kk * kdv for kk in grid.k])


def _cmhd_rhs(grid: Grid, params: PhysicalParams, a_hat, v_hat, b_hat):
    a = _irfft(a_hat, grid)
    v = _irfft(v_hat, grid)
    b = _irfft(b_hat, grid)
    rho = 1.0 + a
    rmin = rho.min()
    if rmin < params.density_floor:
        raise DensityFloorError(f"density {rmin:.3e} below floor {params.density_floor}")
    gv = _grad_real(v_hat, grid)
    gb = _grad_real(b_hat, grid)
    k = grid.k

    # continuity, divergence form keeps the mean of a fixed
    flux = _D(a * v, grid) + v_hat
    a_t = -sum(1j * kk * fc for kk, fc in zip(k, flux))[None]

    div_v_hat = sum(1j * kk * c for kk, c in zip(k, v_hat))
    visc = -params.mu * grid.k2 * v_hat + (params.lam + params.mu) * np.stack([1j * kk * div_v_hat for kk in k])
    p_hat = _D(params.pressure_amplitude * rho[0] ** params.gamma, grid)
    mag_p_hat = _D(0.5 * np.sum(b * b, axis=0), grid)
    force = visc - np.stack([1j * kk * (p_hat + mag_p_hat) for kk in k]) + _D(_advect(b, gb), grid)
    inv_rho = _irfft(_D(1.0 / rho[0], grid), grid)
    v_t = _D(inv_rho * _irfft(force, grid), grid) - _D(_advect(v, gv), grid)

    div_v = np.trace(gv, axis1=0, axis2=1)
    induction = -b * div_v - _advect(v, gb) + _advect(b, gv)
    b_t = _project(_D(induction, grid), grid) - params.eta * grid.k2 * b_hat
    return a_t, v_t, b_t


def _imhd_rhs(grid: Grid, params: PhysicalParams, V_hat, B_hat):
    V = _irfft(V_hat, grid)
    B = _irfft(B_hat, grid)
    gV = _grad_real(V_hat, grid)
    gB = _grad_real(B_hat, grid)
    mom = _D(_advect(B, gB) - _advect(V, gV), grid)
    ind = _D(_advect(B, gV) - _advect(V, gB), grid)
    V_t = _project(mom, grid) - params.mu * grid.k2 * V_hat
    B_t = _project(ind, grid) - params.eta * grid.k2 * B_hat
    return V_t, B_t


def _divergence_ratio(f: SpectralField) -> float:
    g = f.grid
    div = sum(1j * kk * c for kk, c in zip(g.k, f.coeffs))
    n = l2_norm(f)
    return 0.0 if n == 0 else l2_norm(SpectralField(g, div)) / n


def rhs_cmhd(state: CompressibleState, params: PhysicalParams):
    """Time derivatives ``(a_t, v_t, b_t)`` of the compressible system."""
    g = state.grid
    a_t, v_t, b_t = _cmhd_rhs(g, params, state.a.coeffs, state.v.coeffs, state.b.coeffs)
    return SpectralField(g, a_t), SpectralField(g, v_t), SpectralField(g, b_t)


def rhs_imhd(state: IncompressibleState, params: PhysicalParams, tol: float = 1e-8):
    """Time derivatives ``(V_t, B_t)`` with the pressure gradient projected out."""
    for name, f in (("V", state.V), ("B", state.B)):
        if _divergence_ratio(f) > tol:
            raise ValueError(f"{name} is not solenoidal (relative divergence {_divergence_ratio(f):.2e})")
    g = state.grid
    V_t, B_t = _imhd_rhs(g, params, state.V.coeffs, state.B.coeffs)
    return SpectralField(g, V_t), SpectralField(g, B_t)


def recover_pressure(state: IncompressibleState) -> SpectralField:
    """Incompressible pressure ``Π`` from ``∇Π = Q(B·∇B - V·∇V)`` (mean zero)."""
    g = state.grid
    V, B = state.V.real, state.B.real
    gV, gB = _grad_real(state.V.coeffs, g), _grad_real(state.B.coeffs, g)
    mom = _D(_advect(B, gB) - _advect(V, gV), g)
    kdm = sum(kk * c for kk, c in zip(g.k, mom))
    # ∇Π = Q m  =>  Π̂ = -i (k·m̂)/|k|^2
    return SpectralField(g, -1j * kdm * g.inv_k2)


# ------------------------------------------------------------ ETD2 core ----


def _phi_functions(z: np.ndarray):
    """``exp(z)``, ``phi1(z) = (e^z - 1)/z``, ``phi2(z) = (e^z - 1 - z)/z^2``."""
    e = np.exp(z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, np.expm1(zs) / zs)
    phi2 = np.where(small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120, (np.expm1(zs) - zs) / zs**2)
    return e, phi1, phi2


@lru_cache(maxsize=32)
def _etd_tables(grid: Grid, diffusivities: tuple[float, ...], dt: float):
    return {c: _phi_functions(-c * grid.k2 * dt) for c in set(diffusivities)}


def _apply_vector(grid: Grid, coeffs: np.ndarray, mult_P: np.ndarray, mult_Q: np.ndarray) -> np.ndarray:
    if mult_P is mult_Q:
        return mult_P * coeffs
    kdv = sum(kk * c for kk, c in zip(grid.k, coeffs)) * grid.inv_k2
    q = np.stack([kk * kdv for kk in grid.k])
    return mult_P * (coeffs - q) + mult_Q * q


def _etd2_step(grid, fields, specs, rhs, dt):
    """One ETD2RK step.

    ``fields`` is a tuple of coefficient arrays, ``specs`` gives for each the
    pair of diffusivities ``(c_P, c_Q)`` of its linear part, and ``rhs`` maps
    fields to full time derivatives.
    """
    diffs = tuple(c for spec in specs for c in spec)
    tab = _etd_tables(grid, diffs, float(dt))

    def lin(idx, arr, which):
        cP, cQ = specs[idx]
        mP, mQ = tab[cP][which], tab[cQ][which]
        if cP == cQ or arr.shape[0] == 1:
            return mP * arr
        return _apply_vector(grid, arr, mP, mQ)

    def lin_rate(idx, arr):
        cP, cQ = specs[idx]
        if cP == cQ or arr.shape[0] == 1:
            return -cP * grid.k2 * arr
        return _apply_vector(grid, arr, -cP * grid.k2, -cQ * grid.k2)

    r0 = rhs(*fields)
    n0 = [r - lin_rate(i, f) for i, (r, f) in enumerate(zip(r0, fields))]
    stage = tuple(
        lin(i, f, 0) + dt * lin(i, n, 1) for i, (f, n) in enumerate(zip(fields, n0))
    )
    r1 = rhs(*stage)
    n1 = [r - lin_rate(i, f) for i, (r, f) in enumerate(zip(r1, stage))]
    out = tuple(
        s + dt * lin(i, b - a, 2) for i, (s, a, b) in enumerate(zip(stage, n0, n1))
    )
    return tuple(o * grid.dealias_mask for o in out)


# ------------------------------------------------------------ stepping -----


def _max_speed(real: np.ndarray) -> float:
    return float(np.sqrt(np.sum(real**2, axis=0)).max())


def cfl_dt(state, params: PhysicalParams, cfl: float = CFL_NUMBER) -> float:
    """Largest stable dt; the compressible bound includes the sound speed."""
    g = state.grid
    if isinstance(state, CompressibleState):
        rho = state.rho
        c2 = params.pressure_amplitude * params.gamma * np.maximum(rho, params.density_floor) ** (params.gamma - 1)
        speed = _max_speed(state.v.real) + _max_speed(state.b.real) + float(np.sqrt(c2.max()))
    else:
        speed = _max_speed(state.V.real) + _max_speed(state.B.real)
    if speed == 0:
        return math.inf
    return cfl * g.spacing / speed


def _step_cmhd_once(state: CompressibleState, params: PhysicalParams, dt: float) -> CompressibleState:
    g = state.grid
    specs = ((0.0, 0.0), (params.mu, params.nu), (params.eta, params.eta))

    def rhs(a, v, b):
        return _cmhd_rhs(g, params, a, v, b)

    a, v, b = _etd2_step(g, (state.a.coeffs, state.v.coeffs, state.b.coeffs), specs, rhs, dt)
    b = _project(b, g)
    rho_min = 1.0 + _irfft(a, g).min()
    if rho_min < params.density_floor:
        raise DensityFloorError(f"density {rho_min:.3e} below floor after step")
    return CompressibleState(state.time + dt, SpectralField(g, a), SpectralField(g, v), SpectralField(g, b))


def _step_imhd_once(state: IncompressibleState, params: PhysicalParams, dt: float) -> IncompressibleState:
    g = state.grid
    specs = ((params.mu, params.mu), (params.eta, params.eta))

    def rhs(V, B):
        return _imhd_rhs(g, params, V, B)

    V, B = _etd2_step(g, (state.V.coeffs, state.B.coeffs), specs, rhs, dt)
    return IncompressibleState(state.time + dt, SpectralField(g, _project(V, g)), SpectralField(g, _project(B, g)))


def step(state, params: PhysicalParams, dt: float, check_cfl: bool = True, max_retries: int = MAX_RETRIES):
    """Advance either state type by ``dt``.

    A density floor breach halves ``dt`` and retries (as two half steps) up
    to ``max_retries`` times before raising :class:`NumericalFailure`.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if check_cfl:
        limit = cfl_dt(state, params)
        if dt > limit * (1 + 1e-9):
            raise CFLViolation(f"dt={dt:.3e} exceeds CFL bound {limit:.3e}")
    once = _step_cmhd_once if isinstance(state, CompressibleState) else _step_imhd_once
    return _retrying(once, state, params, dt, max_retries)


def _retrying(once, state, params, dt, retries):
    try:
        return once(state, params, dt)
    except DensityFloorError:
        if retries <= 0:
            raise NumericalFailure(f"density floor breach persists at dt={dt:.3e}") from None
        half = _retrying(once, state, params, dt / 2, retries - 1)
        return _retrying(once, half, params, dt / 2, retries - 1)


def trajectory(state, params: PhysicalParams, t_final: float, dt: float, every: int = 1,
               check_cfl: bool = True) -> Iterator:
    """Yield the state at t0 and after every ``every`` steps up to ``t_final``.

    The step count is ``ceil((t_final - t0)/dt)`` with dt shrunk to land on
    ``t_final`` exactly; the final state is always yielded.
    """
    t0 = state.time
    nsteps = max(1, math.ceil((t_final - t0) / dt - 1e-9))
    h = (t_final - t0) / nsteps
    yield state
    for i in range(1, nsteps + 1):
        state = step(state, params, h, check_cfl=check_cfl)
        if i == nsteps:
            state = _with_time(state, t0 + nsteps * h)
        if i % every == 0 or i == nsteps:
            yield state


def _with_time(state, t):
    return replace(state, time=t)


def integrate(state, params: PhysicalParams, t_final: float, dt: float, check_cfl: bool = True):
    """Final state of :func:`trajectory`."""
    last = state
    for last in trajectory(state, params, t_final, dt, every=10**9, check_cfl=check_cfl):
        pass
    return last


def time_derivatives(state, params: PhysicalParams):
    return rhs_cmhd(state, params) if isinstance(state, CompressibleState) else rhs_imhd(state, params)


def embed_incompressible(state: IncompressibleState) -> CompressibleState:
    """Compressible state with ``a = 0`` carrying the same velocity and field."""
    g = state.grid
    return CompressibleState(state.time, SpectralField(g, np.zeros((1,) + g.spectral_shape, complex)),
                             state.V.copy(), state.B.copy())


def project_state(v0: SpectralField, b0: SpectralField, time: float = 0.0) -> IncompressibleState:
    """Incompressible data ``(P v0, P b0)``."""
    return IncompressibleState(time, leray_P(v0), leray_P(b0))
