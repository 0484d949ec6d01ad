"""Run orchestration: simulations, the bulk-viscosity sweep, reconnection and Besov checks."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..besov import (BesovIndex, besov_norm, bony_paraproduct, bony_remainder, build_partition,
                     check_bernstein, check_interpolation, check_k_functional, check_product_law,
                     default_partition)
from ..diagnostics import EnergyLedger, record_pair
from ..dynamics import (CompressibleState, IncompressibleState, NumericalFailure, cfl_dt, project_state,
                        trajectory)
from ..snapshot import write_snapshot
from ..spectral import Grid, SpectralField, l2_norm, leray_P, product
from .config import ConfigError, ExperimentConfig, physical_params
from .rates import RateFit, fit_rate
from .recipes import build_initial

log = logging.getLogger(__name__)

DIV_TOL = 1e-10
MASS_TOL = 1e-12


class InvariantBreach(RuntimeError):
    """A conserved or structural quantity drifted beyond tolerance."""


class SweepMemberError(NumericalFailure):
    def __init__(self, lam, cause):
        super().__init__(f"sweep member lambda={lam!r} failed: {cause}")
        self.lam = lam


@dataclass
class Manifest:
    config: ExperimentConfig
    entries: list[dict] = field(default_factory=list)

    def add(self, path: Path, module: str, operation: str) -> Path:
        self.entries.append({"path": str(path), "module": module, "operation": operation})
        return path

    def write(self, directory: Path) -> Path:
        out = []
        for e in self.entries:
            p = Path(e["path"])
            digest = hashlib.sha256(p.read_bytes()).hexdigest() if p.is_file() else None
            out.append({**e, "path": str(p.relative_to(directory)) if p.is_relative_to(directory) else str(p),
                        "sha256": digest})
        doc = {"config_hash": self.config.digest(), "kind": self.config.kind, "version": __version__,
               "config": self.config.to_dict(), "outputs": out}
        path = directory / "manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


@dataclass
class RunResult:
    directory: Path
    summary: dict
    manifest: Path


def _grid(cfg: ExperimentConfig, n: int | None = None) -> Grid:
    return Grid(cfg.grid.dim, cfg.grid.n if n is None else n, cfg.grid.box_length)


def _initial(cfg: ExperimentConfig, grid: Grid, params):
    try:
        return build_initial(cfg.initial.recipe, grid, params, **cfg.initial.params)
    except ValueError as exc:
        raise ConfigError(f"initial: {exc}") from None


def _resolve_dt(cfg: ExperimentConfig, state, params) -> float:
    if cfg.time.dt is not None:
        return cfg.time.dt
    dt = cfl_dt(state, params, cfg.time.cfl)
    return min(dt, cfg.time.t_final) if math.isfinite(dt) else cfg.time.t_final


def _div_ratio(f: SpectralField) -> float:
    g = f.grid
    n = l2_norm(f)
    if n == 0:
        return 0.0
    div = sum(1j * kk * c for kk, c in zip(g.k, f.coeffs))
    return l2_norm(SpectralField(g, div)) / n


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([x if isinstance(x, str) else _fmt(x) for x in r])
    return path


# ------------------------------------------------------------ simulate ----


def run_simulation(cfg: ExperimentConfig) -> RunResult:
    """Integrate one solver, writing a norm series and optional snapshots."""
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    params = physical_params(cfg)
    a0, v0, b0 = _initial(cfg, grid, params)
    if cfg.kind == "simulate-imhd":
        state = project_state(v0, b0)
    else:
        state = CompressibleState(0.0, a0, v0, b0)
    dt = _resolve_dt(cfg, state, params)
    manifest = Manifest(cfg)
    idx = BesovIndex(grid.dim / 2 - 1)
    rows = []
    mass0 = None
    worst_div = 0.0
    for k, s in enumerate(trajectory(state, params, cfg.time.t_final, dt, every=cfg.output.stride)):
        if isinstance(s, CompressibleState):
            v, b = s.v, s.b
            mass = s.a.coeffs[0].flat[0].real / grid.n**grid.dim
            rho_min = float(s.rho.min())
        else:
            v, b = s.V, s.B
            mass, rho_min = 0.0, 1.0
        mass0 = mass if mass0 is None else mass0
        div = _div_ratio(b)
        worst_div = max(worst_div, div)
        rows.append([s.time, 0.5 * l2_norm(v) ** 2, 0.5 * l2_norm(b) ** 2, besov_norm(v, idx),
                     besov_norm(b, idx), div, mass, rho_min])
        if cfg.output.snapshots:
            for name, f in (("v", v), ("b", b)):
                manifest.add(write_snapshot(out / f"{name}_{k:05d}.snap", f, s.time), "snapshot", "write_snapshot")
        if div > DIV_TOL:
            raise InvariantBreach(f"div b ratio {div:.3e} at t={s.time:.4g}")
        if abs(mass - mass0) > MASS_TOL:
            raise InvariantBreach(f"mass drift {abs(mass - mass0):.3e} at t={s.time:.4g}")
    names = ["kinetic", "magnetic", "besov_v", "besov_b", "div_b_ratio", "mean_a", "rho_min"]
    series = _write_rows(out / "series.csv", ["time", "norm", "value"],
                         [[r[0], name, val] for r in rows for name, val in zip(names, r[1:])])
    manifest.add(series, "dynamics", "step")
    summary = {"steps_dt": dt, "samples": len(rows), "max_div_b_ratio": worst_div, "final_time": rows[-1][0]}
    return RunResult(out, summary, manifest.write(out))


# --------------------------------------------------------------- sweep ----


def _reference_key(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    relevant = {k: d[k] for k in ("grid", "initial", "time", "seed")}
    relevant["physics"] = {k: d["physics"][k] for k in ("mu", "eta")}
    relevant["stride"] = cfg.output.stride
    blob = json.dumps(relevant, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def reference_run(cfg: ExperimentConfig, directory: Path) -> Path:
    """Integrate (and cache) the incompressible reference sampled every ``stride`` steps."""
    path = directory / f"reference-{_reference_key(cfg)}.npz"
    if path.exists():
        return path
    grid = _grid(cfg)
    params = physical_params(cfg)
    _, v0, b0 = _initial(cfg, grid, params)
    times, Vs, Bs = [], [], []
    for s in trajectory(project_state(v0, b0), params, cfg.time.t_final, cfg.time.dt, every=cfg.output.stride):
        times.append(s.time)
        Vs.append(s.V.coeffs)
        Bs.append(s.B.coeffs)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, times=np.array(times), V=np.array(Vs), B=np.array(Bs))
    tmp.replace(path)
    return path


MONITORED = {
    "Pv_minus_V": -0.5,
    "b_minus_B": -0.5,
    "rho_minus_1": -1.0,
    "rho_minus_1_weighted": -0.5,
    "W": -0.5,
}


def run_member(cfg_dict: dict, lam: float, ref_path: str, member_dir: str) -> dict:
    """One compressible integration compared against the cached reference."""
    from .config import config_from_dict

    cfg = config_from_dict(cfg_dict)
    out = Path(member_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    params = physical_params(cfg, lam)
    a0, v0, b0 = _initial(cfg, grid, params)
    ref = np.load(ref_path)
    times, Vs, Bs = ref["times"], ref["V"], ref["B"]
    ledger = EnergyLedger(params)
    lo, hi = BesovIndex(grid.dim / 2 - 1), BesovIndex(grid.dim / 2)
    part = default_partition(grid)
    state = CompressibleState(0.0, a0, v0, b0)
    try:
        for i, s in enumerate(trajectory(state, params, cfg.time.t_final, cfg.time.dt, every=cfg.output.stride)):
            inc = IncompressibleState(float(times[i]), SpectralField(grid, Vs[i]), SpectralField(grid, Bs[i]))
            div = _div_ratio(s.b)
            if div > DIV_TOL:
                raise InvariantBreach(f"div b ratio {div:.3e} at t={s.time:.4g}")
            extra = {
                "Pv_minus_V": besov_norm(leray_P(s.v) - inc.V, lo, part),
                "b_minus_B": besov_norm(s.b - inc.B, lo, part),
                "rho_minus_1": besov_norm(s.a, hi, part),
            }
            record_pair(ledger, s, inc, params, extra)
    except (NumericalFailure, ArithmeticError, ValueError) as exc:
        raise SweepMemberError(lam, exc) from exc
    ledger.write_csv(out / "ledger.csv")
    res = {
        "lambda": float(lam),
        "nu": params.nu,
        "Pv_minus_V": ledger.channel("Pv_minus_V"),
        "b_minus_B": ledger.channel("b_minus_B"),
        "rho_minus_1": ledger.channel("rho_minus_1"),
        "X": ledger.X, "Y": ledger.Y, "Z": ledger.Z, "W": ledger.W,
        "V_script": ledger.V_script,
    }
    res["rho_minus_1_weighted"] = math.sqrt(params.nu / params.mu) * res["rho_minus_1"]
    return res


@dataclass
class SweepResult:
    directory: Path
    members: list[dict]
    fits: dict[str, RateFit]
    manifest: Path


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    if float(cfg.initial.params.get("density", 0.0)) != 0.0:
        raise ConfigError("initial.params.density: rate sweeps require a0 = 0")
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg)
    ref = reference_run(cfg, out)
    manifest.add(ref, "dynamics", "reference_run")
    lams = [float(x) for x in cfg.sweep.lambdas]
    dirs = [str(out / f"lambda_{lam!r}") for lam in lams]
    args = [(cfg.to_dict(), lam, str(ref), d) for lam, d in zip(lams, dirs)]
    if cfg.sweep.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.sweep.workers) as pool:
            futures = [pool.submit(run_member, *a) for a in args]
            members = [f.result() for f in futures]
    else:
        members = [run_member(*a) for a in args]
    for d in dirs:
        manifest.add(Path(d) / "ledger.csv", "diagnostics", "update_energy_ledger")
    fits = {name: fit_rate([(m["nu"], m[name]) for m in members], target) for name, target in MONITORED.items()}
    keys = ["lambda", "nu", *MONITORED, "X", "Y", "Z", "V_script"]
    keys = list(dict.fromkeys(keys))
    manifest.add(_write_rows(out / "members.csv", keys, [[m[k] for k in keys] for m in members]),
                 "harness", "run_sweep")
    manifest.add(_write_rows(out / "rates.csv", ["norm", "slope", "intercept", "residual", "target"],
                             [[n, f.slope, f.intercept, f.residual, f.target] for n, f in fits.items()]),
                 "harness", "fit_rate")
    return SweepResult(out, members, fits, manifest.write(out))


# ---------------------------------------------------------- reconnection ----


@dataclass
class ReconnectionOutcome:
    n: int
    counts: tuple[int, int]
    certified: bool
    report: Path


def run_reconnection(cfg: ExperimentConfig) -> tuple[list[ReconnectionOutcome], Path]:
    """Evolve the reconnection data with the compressible solver at each configured resolution."""
    from ..reconnection import ReconnectionData, build_reconnection_data, topology_report, write_lines_csv, write_null_csv

    rc = cfg.reconnect
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    params = physical_params(cfg)
    manifest = Manifest(cfg)
    rd = ReconnectionData(M=rc.M, T=rc.T, epsilon=rc.epsilon, N=rc.N, abc=tuple(rc.abc),
                          phi_width=rc.phi_width, psi_width=rc.psi_width, cutoff=rc.cutoff)
    rng = np.random.default_rng(cfg.seed)
    outcomes = []
    for n in rc.resolutions:
        grid = Grid(3, n, cfg.grid.box_length)
        V0, B0 = build_reconnection_data(rd, grid, params)
        zero = SpectralField(grid, np.zeros((1,) + grid.spectral_shape, dtype=complex))
        state = CompressibleState(0.0, zero, V0, B0)
        dt = cfg.time.dt if cfg.time.dt is not None else cfl_dt(state, params, cfg.time.cfl)
        final = state
        for final in trajectory(state, params, rc.T, dt, every=10**9):
            div = _div_ratio(final.b)
            if div > DIV_TOL:
                raise InvariantBreach(f"div b ratio {div:.3e}")
        seeds = rng.uniform(0, grid.box_length, (rc.trace_seeds, 3))
        rep = topology_report(B0, final.b, seeds=seeds, s_max=rc.trace_length,
                              labels=(f"n={n} t=0", f"n={n} t={rc.T!r}"))
        sub = out / f"n{n}"
        sub.mkdir(exist_ok=True)
        manifest.add(write_null_csv(sub / "nulls_t0.csv", rep.scan0.nulls), "reconnection", "find_nulls")
        manifest.add(write_null_csv(sub / "nulls_t1.csv", rep.scan1.nulls), "reconnection", "find_nulls")
        manifest.add(write_lines_csv(sub / "lines_t0.csv", rep.lines0), "reconnection", "trace_field_line")
        manifest.add(write_lines_csv(sub / "lines_t1.csv", rep.lines1), "reconnection", "trace_field_line")
        path = manifest.add(rep.write(sub / "certificate.txt"), "reconnection", "topology_report")
        outcomes.append(ReconnectionOutcome(n, rep.counts, rep.certified, path))
    return outcomes, manifest.write(out)


# --------------------------------------------------------------- besov ----


@dataclass
class CheckRow:
    name: str
    value: float
    tolerance: float
    passed: bool


def _random_field(grid: Grid, rng, slope: float, kmax: float) -> SpectralField:
    noise = rng.standard_normal((1,) + grid.shape)
    from ..spectral import fft_forward

    f = fft_forward(noise, grid)
    k = np.where(grid.kmag > 0, grid.kmag, 1.0)
    mult = (k ** -slope) * (grid.kmag <= kmax) * (grid.kmag > 0)
    return SpectralField(grid, f.coeffs * mult)


def bernstein_stability(n: int, bands, samples: int, rng, dim: int = 2) -> tuple[float, dict]:
    """Relative spread across bands of the max forward Bernstein ratio of white-noise band fields."""
    grid = Grid(dim, n)
    part = build_partition(grid)
    from ..spectral import fft_forward

    per_band = {}
    for j in bands:
        mult = part.band_multiplier(j)
        best = 0.0
        for _ in range(samples):
            f = fft_forward(rng.standard_normal((1,) + grid.shape), grid)
            rep = check_bernstein(SpectralField(grid, f.coeffs * mult), j, 1, partition=part)
            best = max(best, rep.forward)
        per_band[j] = best
    vals = np.array(list(per_band.values()))
    return float((vals.max() - vals.min()) / vals.mean()), per_band


def run_besov_checks(cfg: ExperimentConfig) -> tuple[list[CheckRow], Path]:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    grid = _grid(cfg)
    rng = np.random.default_rng(cfg.seed)
    bc = cfg.besov
    manifest = Manifest(cfg)
    rows = []

    part = build_partition(grid)
    rows.append(CheckRow("partition_unity_defect", part.unity_defect(), 1e-12, part.unity_defect() < 1e-12))

    worst = 0.0
    for _ in range(5):
        g = _random_field(grid, rng, rng.uniform(0, 2), grid.n / 3)
        h = _random_field(grid, rng, rng.uniform(0, 2), grid.n / 3)
        recon = bony_paraproduct(g, h, part) + bony_paraproduct(h, g, part) + bony_remainder(g, h, part)
        gh = product(g, h)
        worst = max(worst, l2_norm(recon - gh) / l2_norm(gh))
    rows.append(CheckRow("bony_reconstruction", worst, 1e-8, worst < 1e-8))

    spread, _ = bernstein_stability(bc.bernstein_n, bc.bernstein_bands, bc.bernstein_samples, rng)
    rows.append(CheckRow("bernstein_band_spread", spread, 0.05, spread < 0.05))

    kmax_ratio = 0.0
    prod_max = interp_max = 0.0
    d = grid.dim
    for i in range(bc.samples):
        f = _random_field(grid, rng, rng.uniform(0, 3), rng.uniform(2, grid.n / 3))
        kmax_ratio = max(kmax_ratio, check_k_functional(f, part))
        if i < 50:
            g = _random_field(grid, rng, rng.uniform(0, 3), grid.n / 6)
            prod_max = max(prod_max, check_product_law(f, g, d / 2, d / 2 - 0.5, part))
            interp_max = max(interp_max, check_interpolation(f, part))
    rows.append(CheckRow("k_functional_ratio_max", kmax_ratio, 1.0, kmax_ratio <= 1.0))
    rows.append(CheckRow("product_law_ratio_max", prod_max, math.inf, True))
    rows.append(CheckRow("interpolation_ratio_max", interp_max, math.inf, True))

    path = _write_rows(out / "besov_checks.csv", ["check", "value", "tolerance", "passed"],
                       [[r.name, r.value, r.tolerance, str(r.passed).lower()] for r in rows])
    manifest.add(path, "besov", "run_besov_checks")
    return rows, manifest.write(out)
