"""Homogeneous Littlewood-Paley analysis on the periodic grid.

The cutoff ``chi`` is a radial septic smoothstep equal to 1 on ``|ξ| <= 3/4``
and 0 on ``|ξ| >= 4/3``; ``phi(ξ) = chi(ξ/2) - chi(ξ)``.  Band ``j`` is the
multiplier ``phi(2^{-j} |k|)`` and the low cut-off ``S_j`` is
``chi(2^{-j} |k|)``.  The zero mode belongs to no band.

All norms here use p = 2 through Parseval (identical to uniform-cell
quadrature for trigonometric polynomials); other ``p`` are evaluated in
real space, with ``p = inf`` as the grid maximum.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .spectral import Grid, SpectralField, _irfft, l2_norm, product

_R_IN = 0.75
_R_OUT = 4.0 / 3.0


def chi_profile(r: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 on [0, 3/4], 0 on [4/3, inf), C^3 septic ramp between."""
    r = np.asarray(r, dtype=float)
    t = np.clip((r - _R_IN) / (_R_OUT - _R_IN), 0.0, 1.0)
    s = t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)
    return 1.0 - s


def phi_profile(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass(frozen=True)
class BesovIndex:
    s: float
    p: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        for name in ("p", "r"):
            v = getattr(self, name)
            if not (1.0 <= v <= math.inf):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")

    @classmethod
    def critical_velocity(cls, dim: int, p: float = 2.0) -> BesovIndex:
        return cls(dim / p - 1.0, p, 1.0)

    @classmethod
    def critical_density(cls, dim: int, p: float = 2.0) -> BesovIndex:
        return cls(dim / p, p, 1.0)


class DyadicPartition:
    """Dyadic bands ``j_min..j_max`` covering the grid's nonzero wavenumbers."""

    def __init__(self, grid: Grid, j_min: int, j_max: int):
        if j_max < j_min:
            raise ValueError("j_max must be >= j_min")
        self.grid = grid
        self.j_min = int(j_min)
        self.j_max = int(j_max)

    @property
    def bands(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def __contains__(self, j) -> bool:
        return self.j_min <= j <= self.j_max

    @cached_property
    def _phi_stack(self) -> np.ndarray:
        km = self.grid.kmag
        return np.stack([phi_profile(km / 2.0**j) for j in self.bands])

    @cached_property
    def _phi2_weighted(self) -> np.ndarray:
        return self._phi_stack**2 * self.grid.rfft_weights

    def band_multiplier(self, j: int) -> np.ndarray:
        self._require(j)
        return self._phi_stack[j - self.j_min]

    def low_multiplier(self, j: int) -> np.ndarray:
        """``chi(2^{-j}|k|)`` for any integer j (S_j includes the mean)."""
        return chi_profile(self.grid.kmag / 2.0**j)

    def _require(self, j):
        if j not in self:
            raise ValueError(f"band {j} outside partition range [{self.j_min}, {self.j_max}]")

    def unity_defect(self, k_max: float | None = None) -> float:
        """max |sum_j phi_j - 1| over nonzero grid wavenumbers up to ``k_max``."""
        km = self.grid.kmag
        sel = km > 0
        if k_max is not None:
            sel &= km <= k_max
        total = self._phi_stack.sum(axis=0)
        return float(np.abs(total[sel] - 1.0).max())

    def __repr__(self):
        return f"DyadicPartition(n={self.grid.n}, j={self.j_min}..{self.j_max})"


def _auto_range(k_lo: float, k_hi: float) -> tuple[int, int]:
    j_min = math.floor(math.log2(k_lo * _R_IN) + 1e-12)
    j_max = math.ceil(math.log2(k_hi / _R_IN) - 1 - 1e-12)
    return j_min, j_max


def build_partition(grid: Grid, j_min: int | None = None, j_max: int | None = None,
                    retained_only: bool = False) -> DyadicPartition:
    """Partition whose bands sum to one on every nonzero grid wavenumber.

    With ``retained_only`` the coverage requirement is relaxed to the modes
    kept by 2/3 dealiasing.
    """
    k_lo = grid.k0
    if retained_only:
        k_hi = grid.k0 * (grid.n // 3) * math.sqrt(grid.dim)
    else:
        k_hi = float(grid.kmag.max())
    auto_lo, auto_hi = _auto_range(k_lo, k_hi)
    j_min = auto_lo if j_min is None else int(j_min)
    j_max = auto_hi if j_max is None else int(j_max)
    lo_edge = _R_OUT * 2.0**j_min
    hi_edge = _R_IN * 2.0 ** (j_max + 1)
    if lo_edge > k_lo * (1 + 1e-12) or hi_edge < k_hi * (1 - 1e-12):
        gaps = []
        if lo_edge > k_lo * (1 + 1e-12):
            gaps.append(f"|k| in [{k_lo:.6g}, {lo_edge:.6g})")
        if hi_edge < k_hi * (1 - 1e-12):
            gaps.append(f"|k| in ({hi_edge:.6g}, {k_hi:.6g}]")
        raise ValueError(
            f"band range [{j_min}, {j_max}] leaves wavenumbers uncovered: " + ", ".join(gaps)
        )
    return DyadicPartition(grid, j_min, j_max)


_PARTITIONS: dict = {}


def default_partition(grid: Grid) -> DyadicPartition:
    part = _PARTITIONS.get(grid)
    if part is None:
        part = _PARTITIONS[grid] = build_partition(grid)
    return part


def _partition_for(f: SpectralField, partition: DyadicPartition | None) -> DyadicPartition:
    if partition is None:
        return default_partition(f.grid)
    if partition.grid != f.grid:
        raise ValueError("partition built for a different grid")
    return partition


def dyadic_block(f: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    part = _partition_for(f, partition)
    return SpectralField(f.grid, part.band_multiplier(j) * f.coeffs)


def low_cutoff(f: SpectralField, j: int, partition: DyadicPartition | None = None) -> SpectralField:
    part = _partition_for(f, partition)
    if not (part.j_min - 1 <= j <= part.j_max + 1):
        raise ValueError(f"cut-off index {j} outside [{part.j_min - 1}, {part.j_max + 1}]")
    return SpectralField(f.grid, part.low_multiplier(j) * f.coeffs)


@dataclass
class BandDecomposition:
    bands: dict[int, SpectralField]
    low: SpectralField
    source: str = ""

    def reconstruct(self) -> SpectralField:
        out = self.low.copy()
        for fj in self.bands.values():
            out = out + fj
        return out

    def dump(self, directory, time: float = 0.0) -> list[Path]:
        """Write one snapshot file per band (plus ``low``)."""
        from .snapshot import write_snapshot

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = self.source or "field"
        paths = [write_snapshot(directory / f"{stem}_low.bin", self.low, time)]
        for j, fj in self.bands.items():
            paths.append(write_snapshot(directory / f"{stem}_band{j:+d}.bin", fj, time))
        return paths


def decompose(f: SpectralField, partition: DyadicPartition | None = None, source: str = "") -> BandDecomposition:
    part = _partition_for(f, partition)
    bands = {j: dyadic_block(f, j, part) for j in part.bands}
    return BandDecomposition(bands, low_cutoff(f, part.j_min, part), source)


def _lp_real(values: np.ndarray, grid: Grid, p: float) -> float:
    """L^p norm of a (components, *shape) real array using the Euclidean pointwise norm."""
    mag = np.sqrt(np.sum(values**2, axis=0))
    if p == math.inf:
        return float(mag.max())
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def band_lp_norms(f: SpectralField, p: float = 2.0, partition: DyadicPartition | None = None) -> np.ndarray:
    """``||Δ_j f||_{L^p}`` for every band of the partition."""
    part = _partition_for(f, partition)
    g = f.grid
    if p == 2.0:
        power = np.sum(np.abs(f.coeffs) ** 2, axis=0)
        e = np.tensordot(part._phi2_weighted, power, axes=f.grid.dim)
        return np.sqrt(np.maximum(e, 0.0) * g.box_length**g.dim) / g.n**g.dim
    out = np.empty(len(part.bands))
    for i, j in enumerate(part.bands):
        vals = _irfft(part.band_multiplier(j) * f.coeffs, g)
        out[i] = _lp_real(vals, g, p)
    return out


def _weighted_sum(norms: np.ndarray, js: np.ndarray, idx: BesovIndex) -> float:
    terms = 2.0 ** (js * idx.s) * norms
    if idx.r == math.inf:
        return float(terms.max()) if terms.size else 0.0
    return float(np.sum(terms**idx.r) ** (1.0 / idx.r))


def besov_norm(f: SpectralField, idx: BesovIndex, partition: DyadicPartition | None = None) -> float:
    """Homogeneous Besov norm summed over the partition's bands."""
    part = _partition_for(f, partition)
    norms = band_lp_norms(f, idx.p, part)
    return _weighted_sum(norms, np.arange(part.j_min, part.j_max + 1, dtype=float), idx)


def low_high_split(f: SpectralField, nu: float,
                   partition: DyadicPartition | None = None) -> tuple[SpectralField, SpectralField]:
    """Split into bands with ``2^j nu <= 1`` (low) and ``2^j nu > 1`` (high).

    The mean (zero mode) belongs to neither part.
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    part = _partition_for(f, partition)
    lo = np.zeros(f.grid.spectral_shape)
    hi = np.zeros(f.grid.spectral_shape)
    for j in part.bands:
        if 2.0**j * nu <= 1.0:
            lo += part.band_multiplier(j)
        else:
            hi += part.band_multiplier(j)
    return SpectralField(f.grid, lo * f.coeffs), SpectralField(f.grid, hi * f.coeffs)


def _time_norm(values: np.ndarray, times: np.ndarray, r_t: float, axis: int = 0) -> np.ndarray:
    if r_t == math.inf:
        return values.max(axis=axis)
    if values.shape[axis] == 1:
        return np.zeros(values.shape[1:]) if values.ndim > 1 else np.zeros(())
    return np.trapezoid(values**r_t, times, axis=axis) ** (1.0 / r_t)


def chemin_lerner_norm(series: Sequence[SpectralField], times: Sequence[float], idx: BesovIndex,
                       r_t: float, partition: DyadicPartition | None = None) -> float:
    """``sum_j 2^{js} ||Δ_j f||_{L^{r_t}_T L^p}`` with trapezoidal time quadrature."""
    if len(series) == 0:
        raise ValueError("empty series")
    if r_t not in (1, 2, math.inf):
        raise ValueError("time exponent must be 1, 2 or inf")
    times = np.asarray(times, dtype=float)
    if times.size != len(series):
        raise ValueError("times and series lengths differ")
    part = _partition_for(series[0], partition)
    per = np.stack([band_lp_norms(f, idx.p, part) for f in series])
    band_time = _time_norm(per, times, r_t)
    js = np.arange(part.j_min, part.j_max + 1, dtype=float)
    return float(np.sum(2.0 ** (js * idx.s) * band_time))


def time_besov_norm(series: Sequence[SpectralField], times: Sequence[float], idx: BesovIndex,
                    r_t: float, partition: DyadicPartition | None = None) -> float:
    """Plain ``||f||_{L^{r_t}_T B^s_{p,1}}`` (time norm outside the band sum)."""
    if len(series) == 0:
        raise ValueError("empty series")
    vals = np.array([besov_norm(f, idx, partition) for f in series])
    return float(_time_norm(vals, np.asarray(times, dtype=float), r_t))


def _check_scalar_pair(g: SpectralField, h: SpectralField):
    if g.grid != h.grid:
        raise ValueError("fields live on different grids")
    if g.components != 1 or h.components != 1:
        raise ValueError("Bony decomposition is implemented for scalar fields")


def bony_paraproduct(g: SpectralField, h: SpectralField,
                     partition: DyadicPartition | None = None) -> SpectralField:
    """``T_g h = sum_j S_{j-1} g · Δ_j h`` with dealiased products."""
    _check_scalar_pair(g, h)
    part = _partition_for(g, partition)
    acc = np.zeros_like(g.coeffs)
    for j in part.bands:
        low = SpectralField(g.grid, part.low_multiplier(j - 1) * g.coeffs)
        acc += product(low, dyadic_block(h, j, part)).coeffs
    return SpectralField(g.grid, acc)


def bony_remainder(g: SpectralField, h: SpectralField,
                   partition: DyadicPartition | None = None) -> SpectralField:
    """``R(g, h) = sum_{|k-j|<=1} Δ_k g · Δ_j h``."""
    _check_scalar_pair(g, h)
    part = _partition_for(g, partition)
    acc = np.zeros_like(g.coeffs)
    for j in part.bands:
        near = np.zeros(g.grid.spectral_shape)
        for k in (j - 1, j, j + 1):
            if k in part:
                near += part.band_multiplier(k)
        acc += product(SpectralField(g.grid, near * g.coeffs), dyadic_block(h, j, part)).coeffs
    return SpectralField(g.grid, acc)


def _derivative_tensor(f: SpectralField, order: int) -> np.ndarray:
    """Real-space values of every ``order``-th partial derivative, stacked."""
    g = f.grid
    comps = []
    for c in f.coeffs:
        for combo in itertools.product(range(g.dim), repeat=order):
            mult = np.ones(g.spectral_shape, dtype=complex)
            for ax in combo:
                mult = mult * (1j * g.k[ax])
            comps.append(mult * c)
    if not comps:
        return f.real
    return _irfft(np.stack(comps), g)


@dataclass
class BernsteinReport:
    band: int
    order: int
    p: float
    q: float
    forward: float
    reverse: float


def check_bernstein(f: SpectralField, j: int, k: int, p: float = 2.0, q: float = 2.0,
                    partition: DyadicPartition | None = None) -> BernsteinReport:
    """Ratios for the direct and reverse Bernstein inequalities on band ``j``."""
    if q < p:
        raise ValueError("Bernstein inequality needs q >= p")
    part = _partition_for(f, partition)
    support = part.band_multiplier(j) > 0
    scale = max(np.abs(f.coeffs).max(), 1e-300)
    if np.abs(f.coeffs[:, ~support]).max(initial=0.0) > 1e-12 * scale:
        raise ValueError(f"field is not supported in band {j}")
    g = f.grid
    d = g.dim
    base_p = _lp_real(f.real, g, p)
    if base_p == 0:
        raise ValueError("zero field")
    deriv_q = _lp_real(_derivative_tensor(f, k), g, q)
    forward = deriv_q / (2.0 ** (j * (k + d * (1.0 / p - (0.0 if q == math.inf else 1.0 / q)))) * base_p)
    grad_p = _lp_real(_derivative_tensor(f, 1), g, p)
    reverse = base_p / (2.0**-j * grad_p)
    return BernsteinReport(j, k, p, q, forward, reverse)


def _hessian_band_field(f: SpectralField) -> SpectralField:
    # For p = 2 the Hessian's Frobenius band norms equal those of Δf.
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def check_product_law(g: SpectralField, h: SpectralField, s1: float, s2: float,
                      partition: DyadicPartition | None = None) -> float:
    d = g.grid.dim
    if s1 > d / 2 or s2 > d / 2 or s1 + s2 <= 0:
        raise ValueError("product law needs s1, s2 <= d/2 and s1 + s2 > 0")
    ng = besov_norm(g, BesovIndex(s1), partition)
    nh = besov_norm(h, BesovIndex(s2), partition)
    if ng == 0 or nh == 0:
        raise ValueError("degenerate denominator (zero field)")
    gh = product(g, h)
    return besov_norm(gh, BesovIndex(s1 + s2 - d / 2), partition) / (ng * nh)


def check_interpolation(f: SpectralField, partition: DyadicPartition | None = None) -> float:
    d = f.grid.dim
    lo = besov_norm(f, BesovIndex(d / 2 - 1), partition)
    hi = besov_norm(_hessian_band_field(f), BesovIndex(d / 2 - 1), partition)
    if lo == 0 or hi == 0:
        raise ValueError("degenerate denominator (zero field)")
    return besov_norm(f, BesovIndex(d / 2), partition) / math.sqrt(lo * hi)


def check_k_functional(f: SpectralField, partition: DyadicPartition | None = None) -> float:
    """``||f||_{B^{1/2}_{2,1}} / (4 ||f||_{L^2}^{1/2} ||f||_{H^1}^{1/2})``; at most 1."""
    l2 = l2_norm(f)
    h1 = math.sqrt(sum(l2_norm(SpectralField(f.grid, 1j * kk * f.coeffs)) ** 2 for kk in f.grid.k))
    if l2 == 0 or h1 == 0:
        raise ValueError("degenerate denominator (zero field)")
    return besov_norm(f, BesovIndex(0.5), partition) / (4.0 * math.sqrt(l2 * h1))


@dataclass
class NormRow:
    time: float
    norm_name: str
    s: float
    p: float
    r: float
    value: float


def write_norm_report(path, rows: Sequence[NormRow]) -> Path:
    """CSV with columns ``time, norm_name, s, p, r, value``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "norm_name", "s", "p", "r", "value"])
        for row in rows:
            w.writerow([repr(float(row.time)), row.norm_name, repr(float(row.s)), repr(float(row.p)),
                        repr(float(row.r)), repr(float(row.value))])
    return path
