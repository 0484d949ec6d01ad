"""Difference variables, energy functionals and incompressible energy balance."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .besov import BesovIndex, besov_norm, default_partition, low_high_split
from .dynamics import CompressibleState, IncompressibleState, PhysicalParams, rhs_cmhd, rhs_imhd
from .spectral import (SpectralField, gradient, inverse_laplacian_gradient, l2_norm, leray_P,
                       leray_Q)

TIME_TOL = 1e-12


def difference_state(comp: CompressibleState, incomp: IncompressibleState):
    """``(a, u, h)`` with ``u = v - V`` and ``h = b - B``."""
    if comp.grid != incomp.grid:
        raise ValueError("grids differ")
    if abs(comp.time - incomp.time) > TIME_TOL * max(1.0, abs(comp.time)):
        raise ValueError(f"time mismatch: {comp.time!r} vs {incomp.time!r}")
    return comp.a.copy(), comp.v - incomp.V, comp.b - incomp.B


def effective_velocity(a: SpectralField, u: SpectralField, params: PhysicalParams) -> SpectralField:
    """``w = Qu + nu^{-1} (-Δ)^{-1} ∇a``."""
    return leray_Q(u) + inverse_laplacian_gradient(a) * (1.0 / params.nu)


def _hess(f: SpectralField) -> SpectralField:
    # ||∇²f||_{Ḃ^s_{2,1}} equals ||Δf||_{Ḃ^s_{2,1}} band by band for p = 2
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


# channel name -> (functional, time exponent)
CHANNELS = {
    "Qu": ("X", math.inf),
    "a": ("X", math.inf),
    "nu_grad_a": ("X", math.inf),
    "Qu_t_plus_grad_a": ("Y", 1),
    "nu_hess_Qu": ("Y", 1),
    "nu_hess_a_low": ("Y", 1),
    "grad_a_high": ("Y", 1),
    "Pu": ("Z", math.inf),
    "h": ("Z", math.inf),
    "Pu_t": ("W", 1),
    "mu_hess_Pu": ("W", 1),
    "h_t": ("W", 1),
    "eta_hess_h": ("W", 1),
}

REFERENCE_CHANNELS = {
    "V": math.inf,
    "V_t": 1,
    "hess_V": 1,
    "B_high": 1,
    "B": math.inf,
}


def _accumulate(times: np.ndarray, values: np.ndarray, r_t: float) -> float:
    if values.size == 0:
        return 0.0
    if r_t == math.inf:
        return float(values.max())
    if values.size == 1:
        return 0.0
    return float(np.trapezoid(values, times))


@dataclass
class EnergyLedger:
    """Sampled Besov norms of the difference unknowns and their accumulated functionals.

    Every multi-field functional is the sum of the individual channel norms.
    L^inf in time is a running maximum and L^1 is trapezoidal.
    """

    params: PhysicalParams
    times: list[float] = field(default_factory=list)
    samples: dict[str, list[float]] = field(default_factory=lambda: {c: [] for c in CHANNELS})
    reference_times: list[float] = field(default_factory=list)
    reference: dict[str, list[float]] = field(default_factory=lambda: {c: [] for c in REFERENCE_CHANNELS})
    extra: dict[str, list[float]] = field(default_factory=dict)

    def _functional(self, name: str) -> float:
        t = np.asarray(self.times)
        return sum(_accumulate(t, np.asarray(self.samples[c]), r) for c, (f, r) in CHANNELS.items() if f == name)

    @property
    def X(self) -> float:
        return self._functional("X")

    @property
    def Y(self) -> float:
        return self._functional("Y")

    @property
    def Z(self) -> float:
        return self._functional("Z")

    @property
    def W(self) -> float:
        return self._functional("W")

    def channel(self, name: str, r_t: float | None = None) -> float:
        """Time norm of one recorded channel (also any ``extra`` channel)."""
        if name in CHANNELS:
            vals, times = self.samples[name], self.times
            r_t = CHANNELS[name][1] if r_t is None else r_t
        elif name in self.extra:
            vals, times = self.extra[name], self.times
            r_t = math.inf if r_t is None else r_t
        else:
            raise KeyError(name)
        return _accumulate(np.asarray(times), np.asarray(vals), r_t)

    @property
    def V_script(self) -> float:
        t = np.asarray(self.reference_times)
        return sum(_accumulate(t, np.asarray(self.reference[c]), r) for c, r in REFERENCE_CHANNELS.items())

    @property
    def M(self) -> float:
        """Smallest admissible bound on the incompressible reference over the sampled window."""
        return self.V_script

    def record_reference(self, time: float, V: SpectralField, B: SpectralField,
                         V_t: SpectralField | None) -> EnergyLedger:
        if V_t is None:
            raise ValueError("missing derivative channel: V_t")
        _check_time(self.reference_times, time)
        d = V.grid.dim
        lo, hi = BesovIndex(d / 2 - 1), BesovIndex(d / 2 + 1)
        part = default_partition(V.grid)
        vals = {
            "V": besov_norm(V, lo, part),
            "V_t": besov_norm(V_t, lo, part),
            "hess_V": besov_norm(_hess(V), lo, part),
            "B_high": besov_norm(B, hi, part),
            "B": besov_norm(B, lo, part),
        }
        self.reference_times.append(float(time))
        for c, v in vals.items():
            self.reference[c].append(v)
        return self

    def rows(self):
        """``(time, channel, value)`` triples in recording order."""
        for i, t in enumerate(self.times):
            for c in CHANNELS:
                yield t, c, self.samples[c][i]
            for c in sorted(self.extra):
                yield t, c, self.extra[c][i]

    def write_csv(self, path) -> Path:
        """Long format: one ``time,norm,value`` row per channel and sample."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "norm", "value"])
            for t, c, v in self.rows():
                w.writerow([repr(float(t)), c, repr(float(v))])
        return path


def _check_time(times: list[float], t: float):
    if times and not t > times[-1]:
        raise ValueError(f"sample time {t!r} does not follow {times[-1]!r}")


def update_energy_ledger(ledger: EnergyLedger, a: SpectralField, u: SpectralField, h: SpectralField,
                         params: PhysicalParams, *, time: float,
                         rates: Sequence[SpectralField | None] | None = None,
                         extra: dict[str, float] | None = None) -> EnergyLedger:
    """Append one sample.

    ``rates`` is ``(a_t, u_t, h_t)`` taken from the right-hand sides (u_t is
    ``v_t - V_t``).  ``a_t`` is not needed by any functional and may be None.
    """
    if rates is None or len(rates) != 3:
        raise ValueError("missing derivative channel: rates must be (a_t, u_t, h_t)")
    _, u_t, h_t = rates
    for name, r in (("u_t", u_t), ("h_t", h_t)):
        if r is None:
            raise ValueError(f"missing derivative channel: {name}")
    _check_time(ledger.times, time)

    g = a.grid
    d = g.dim
    idx = BesovIndex(d / 2 - 1)
    part = default_partition(g)
    nu, mu, eta = params.nu, params.mu, params.eta

    def norm(f):
        return besov_norm(f, idx, part)

    Qu, Pu = leray_Q(u), leray_P(u)
    grad_a = gradient(a)
    a_lo, a_hi = low_high_split(a, nu, part)
    Qu_t = leray_Q(u_t)
    vals = {
        "Qu": norm(Qu),
        "a": norm(a),
        "nu_grad_a": nu * norm(grad_a),
        "Qu_t_plus_grad_a": norm(Qu_t + grad_a),
        "nu_hess_Qu": nu * norm(_hess(Qu)),
        "nu_hess_a_low": nu * norm(_hess(a_lo)),
        "grad_a_high": norm(gradient(a_hi)),
        "Pu": norm(Pu),
        "h": norm(h),
        "Pu_t": norm(leray_P(u_t)),
        "mu_hess_Pu": mu * norm(_hess(Pu)),
        "h_t": norm(h_t),
        "eta_hess_h": eta * norm(_hess(h)),
    }
    extra = dict(extra or {})
    if ledger.times and set(extra) != set(ledger.extra):
        raise ValueError("extra channels must match earlier samples")
    ledger.times.append(float(time))
    for c, v in vals.items():
        ledger.samples[c].append(v)
    for c, v in extra.items():
        ledger.extra.setdefault(c, []).append(float(v))
    return ledger


def record_pair(ledger: EnergyLedger, comp: CompressibleState, incomp: IncompressibleState,
                params: PhysicalParams, extra: dict[str, float] | None = None) -> EnergyLedger:
    """Sample both solvers at a common time, deriving rates from their RHS."""
    a, u, h = difference_state(comp, incomp)
    a_t, v_t, b_t = rhs_cmhd(comp, params)
    V_t, B_t = rhs_imhd(incomp, params)
    update_energy_ledger(ledger, a, u, h, params, time=comp.time,
                         rates=(a_t, v_t - V_t, b_t - B_t), extra=extra)
    ledger.record_reference(incomp.time, incomp.V, incomp.B, V_t)
    return ledger


def _grad_sq(f: SpectralField) -> float:
    return sum(l2_norm(SpectralField(f.grid, 1j * kk * f.coeffs)) ** 2 for kk in f.grid.k)


def energy_balance_residual(history: Iterable[IncompressibleState], params: PhysicalParams) -> float:
    """Max relative defect of ``|V|² + |B|² + 2mu∫|∇V|² + 2eta∫|∇B|² = E(0)``.

    ``history`` may be a generator; it is consumed once.
    """
    it = iter(history)
    try:
        s0 = next(it)
    except StopIteration:
        raise ValueError("empty history") from None
    e0 = l2_norm(s0.V) ** 2 + l2_norm(s0.B) ** 2

    def dissipation(s):
        return 2 * params.mu * _grad_sq(s.V) + 2 * params.eta * _grad_sq(s.B)

    t_prev, d_prev = s0.time, dissipation(s0)
    integral, worst = 0.0, 0.0
    for s in it:
        d = dissipation(s)
        integral += 0.5 * (d + d_prev) * (s.time - t_prev)
        t_prev, d_prev = s.time, d
        e = l2_norm(s.V) ** 2 + l2_norm(s.B) ** 2 + integral
        worst = max(worst, abs(e - e0))
    return 0.0 if e0 == 0 else worst / e0


def explicit_M_bound(V0: SpectralField, B0: SpectralField, params: PhysicalParams, C: float = 1.0) -> float:
    """``C (|V0|_{Ḃ⁰} + |B0|_{Ḃ⁰}) exp(C (mu⁻⁴ + mu⁻³eta⁻¹ + eta⁻³mu⁻¹ + eta⁻⁴)(|V0|⁴ + |B0|⁴))``.

    Two dimensions only.  Returns ``inf`` when the exponential overflows.
    """
    if V0.grid.dim != 2:
        raise ValueError("explicit bound is two-dimensional only")
    mu, eta = params.mu, params.eta
    if eta <= 0:
        raise ValueError("explicit bound needs eta > 0")
    idx = BesovIndex(0.0)
    pre = C * (besov_norm(V0, idx) + besov_norm(B0, idx))
    if pre == 0:
        return 0.0
    rate = mu**-4 + mu**-3 / eta + eta**-3 / mu + eta**-4
    expo = C * rate * (l2_norm(V0) ** 4 + l2_norm(B0) ** 4)
    try:
        return pre * math.exp(expo)
    except OverflowError:
        return math.inf
