"""Detection and classification of magnetic null points."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kernels
from ..spectral import SpectralField
from .evaluation import FieldProbe

CLASS_MARGIN = 1e-3


@dataclass
class NullPoint:
    location: np.ndarray
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    residual: float

    @property
    def hyperbolic(self) -> bool:
        return self.classification == "hyperbolic"


@dataclass
class NullScan:
    nulls: list[NullPoint]
    seeds: int
    failures: list[tuple[int, str]] = field(default_factory=list)
    screened: int = 0

    @property
    def hyperbolic_count(self) -> int:
        return sum(p.hyperbolic for p in self.nulls)


def classify(jac: np.ndarray, grad_sup: float, margin: float = CLASS_MARGIN):
    eig = np.linalg.eigvals(jac)
    eig = eig[np.lexsort((eig.imag, eig.real))]
    hyper = np.min(np.abs(eig.real)) > margin * grad_sup
    return eig, "hyperbolic" if hyper else "degenerate"


def _local_minima(mag: np.ndarray, threshold: float) -> np.ndarray:
    is_min = mag < threshold
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dz in (-1, 0, 1):
                if dx or dy or dz:
                    is_min &= mag <= np.roll(mag, (dx, dy, dz), axis=(0, 1, 2))
    return np.argwhere(is_min)


def _newton(probe: FieldProbe, x0: np.ndarray, tol: float, max_iter: int):
    x = x0.copy()
    target = tol * probe.sup
    r = np.linalg.norm(probe(x)[0])
    for _ in range(max_iter):
        if r < target:
            return x, r
        b = probe(x)[0]
        J = probe.jacobian(x)[0]
        try:
            dx = np.linalg.solve(J, -b)
        except np.linalg.LinAlgError:
            raise ArithmeticError("singular Jacobian") from None
        step = 1.0
        while step > 1e-4:
            xn = x + step * dx
            rn = np.linalg.norm(probe(xn)[0])
            if rn < r:
                break
            step /= 2
        else:
            raise ArithmeticError("line search stalled")
        x, r = xn, rn
    if r < target:
        return x, r
    raise ArithmeticError(f"no convergence (|b|={r:.2e})")


def _periodic_dist(a: np.ndarray, b: np.ndarray, L: float) -> float:
    d = np.abs(a - b) % L
    return float(np.linalg.norm(np.minimum(d, L - d)))


def _screen(probe: FieldProbe, seeds: np.ndarray, iters: int = 25, accept: float = 1e-3) -> np.ndarray:
    """Batched damped Newton on the tricubic interpolant; returns indices of promising seeds."""
    if len(seeds) == 0:
        return np.zeros(0, dtype=int)
    h = probe.grid.spacing
    x = seeds.copy()
    for _ in range(iters):
        b = probe.fast_value(x)
        J = probe.fast_jac(x).reshape(-1, 3, 3)
        det = np.linalg.det(J)
        ok = np.abs(det) > 1e-300
        dx = np.zeros_like(x)
        dx[ok] = np.linalg.solve(J[ok], -b[ok][..., None])[..., 0]
        size = np.linalg.norm(dx, axis=1)
        dx *= np.minimum(1.0, h / np.maximum(size, 1e-300))[:, None]
        x += dx
    r = np.linalg.norm(probe.fast_value(x), axis=1)
    moved = np.linalg.norm(x - seeds, axis=1)
    return np.nonzero((r < accept * probe.sup) & (moved < 3 * h))[0], x


def scan_nulls(b: SpectralField | FieldProbe, coarse_stride: int = 1, newton_tol: float = 1e-10,
               seed_fraction: float = 0.05, max_iter: int = 40, method: str = "auto",
               margin: float = CLASS_MARGIN) -> NullScan:
    """Seed from sign-change cells and small local minima of |b|, refine by Newton, merge duplicates.

    All seeds are first screened by a batched Newton pass on the tricubic
    interpolant; survivors are refined on the spectrally evaluated field.
    """
    probe = b if isinstance(b, FieldProbe) else FieldProbe(b, method)
    g = probe.grid
    L = g.box_length
    vals = _grid_values(probe, coarse_stride)
    h = g.spacing * coarse_stride
    cells = kernels.sign_change_cells(vals)
    mag = np.sqrt(np.sum(vals**2, axis=0))
    minima = _local_minima(mag, seed_fraction * probe.sup)
    seeds = np.concatenate([(cells + 0.5) * h, minima * h]).reshape(-1, 3).astype(float)
    keep, moved = _screen(probe, seeds) if len(seeds) else (np.zeros(0, dtype=int), seeds)
    nulls: list[NullPoint] = []
    failures = []
    for i in keep:
        try:
            x, r = _newton(probe, moved[i], newton_tol, max_iter)
        except ArithmeticError as exc:
            failures.append((int(i), str(exc)))
            continue
        x = x % L
        if any(_periodic_dist(x, p.location, L) < g.spacing for p in nulls):
            continue
        J = probe.jacobian(x)[0]
        eig, cls = classify(J, probe.grad_sup, margin)
        nulls.append(NullPoint(x, J, eig, cls, r))
    return NullScan(nulls, len(seeds), failures, screened=len(keep))


def _grid_values(probe: FieldProbe, stride: int) -> np.ndarray:
    return np.ascontiguousarray(probe.values[:, ::stride, ::stride, ::stride])


def find_nulls(b: SpectralField, coarse_stride: int = 1, newton_tol: float = 1e-10, **kw) -> list[NullPoint]:
    return scan_nulls(b, coarse_stride, newton_tol, **kw).nulls


def write_null_csv(path, nulls: list[NullPoint]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "eig_re_1", "eig_re_2", "eig_re_3", "eig_im_1", "eig_im_2", "eig_im_3", "class"])
        for p in nulls:
            w.writerow([repr(float(v)) for v in p.location] + [repr(float(v)) for v in p.eigenvalues.real]
                       + [repr(float(v)) for v in p.eigenvalues.imag] + [p.classification])
    return path
