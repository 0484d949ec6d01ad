import math

import numpy as np
import pytest

from conftest import random_field
from mhdlimit.besov import BesovIndex, besov_norm
from mhdlimit.diagnostics import (CHANNELS, EnergyLedger, difference_state, effective_velocity, energy_balance_residual,
                                  explicit_M_bound, record_pair, update_energy_ledger)
from mhdlimit.dynamics import (CompressibleState, IncompressibleState, PhysicalParams, embed_incompressible,
                               trajectory)
from mhdlimit.spectral import Grid, SpectralField, fft_forward, gradient, l2_norm, leray_P, leray_Q


def zeros(g, c):
    return SpectralField(g, np.zeros((c,) + g.spectral_shape, complex))


@pytest.fixture
def params():
    return PhysicalParams(mu=0.05, lam=5.0, eta=0.05)


class TestDifferenceState:
    def test_embedded(self, rng):
        g = Grid(2, 16)
        V = leray_P(random_field(g, rng, 2))
        inc = IncompressibleState(0.0, V, V)
        a, u, h = difference_state(embed_incompressible(inc), inc)
        assert np.abs(u.coeffs).max() == 0 and np.abs(h.coeffs).max() == 0

    def test_identity(self, rng):
        g = Grid(2, 16)
        comp = CompressibleState(0.0, random_field(g, rng), random_field(g, rng, 2), leray_P(random_field(g, rng, 2)))
        inc = IncompressibleState(0.0, leray_P(random_field(g, rng, 2)), leray_P(random_field(g, rng, 2)))
        a, u, h = difference_state(comp, inc)
        assert np.allclose((u + inc.V).real, comp.v.real, atol=1e-14)

    def test_time_mismatch(self):
        g = Grid(2, 8)
        with pytest.raises(ValueError, match="time"):
            difference_state(CompressibleState(0.0, zeros(g, 1), zeros(g, 2), zeros(g, 2)),
                             IncompressibleState(0.1, zeros(g, 2), zeros(g, 2)))


class TestEffectiveVelocity:
    def test_zero_density(self, rng, params):
        g = Grid(2, 16)
        u = random_field(g, rng, 2)
        w = effective_velocity(zeros(g, 1), u, params)
        assert l2_norm(w - leray_Q(u)) == 0

    def test_single_mode(self, params):
        g = Grid(2, 32)
        x, y = g.coordinates()
        a = fft_forward(np.cos(2 * x)[None], g)
        w = effective_velocity(a, zeros(g, 2), params)
        # ik/|k|^2 on cos 2x is -sin(2x)/2
        assert np.allclose(w.real[0], -np.sin(2 * x) / (2 * params.nu), atol=1e-14)

    def test_both_zero(self, params):
        g = Grid(2, 8)
        assert np.abs(effective_velocity(zeros(g, 1), zeros(g, 2), params).coeffs).max() == 0


class TestLedger:
    def _sample(self, ledger, g, t, a, u, h, params):
        return update_energy_ledger(ledger, a, u, h, params, time=t, rates=(None, u * 0.5, h * 0.5))

    def test_zero_history(self, params):
        g = Grid(2, 16)
        led = EnergyLedger(params)
        for t in (0.0, 0.1, 0.2):
            self._sample(led, g, t, zeros(g, 1), zeros(g, 2), zeros(g, 2), params)
        assert led.X == led.Y == led.Z == led.W == 0.0

    def test_single_mode_x(self, params):
        g = Grid(2, 32)
        x, _ = g.coordinates()
        a = fft_forward(np.cos(4 * x)[None], g)
        led = self._sample(EnergyLedger(params), g, 0.0, a, zeros(g, 2), zeros(g, 2), params)
        idx = BesovIndex(0.0)
        expect = besov_norm(a, idx) + params.nu * besov_norm(gradient(a), idx)
        assert led.X == pytest.approx(expect, rel=1e-12)
        assert besov_norm(gradient(a), idx) == pytest.approx(4 * besov_norm(a, idx), rel=1e-12)

    def test_monotone(self, rng, params):
        g = Grid(2, 16)
        led = EnergyLedger(params)
        prev = (0.0,) * 4
        for i in range(5):
            f = random_field(g, rng, 2)
            self._sample(led, g, 0.1 * i, random_field(g, rng), f, leray_P(f), params)
            cur = (led.X, led.Y, led.Z, led.W)
            assert all(c >= p for c, p in zip(cur, prev))
            prev = cur

    def test_missing_rate(self, params):
        g = Grid(2, 8)
        with pytest.raises(ValueError, match="missing derivative"):
            update_energy_ledger(EnergyLedger(params), zeros(g, 1), zeros(g, 2), zeros(g, 2), params,
                                 time=0.0, rates=(None, None, zeros(g, 2)))

    def test_time_order(self, params):
        g = Grid(2, 8)
        led = self._sample(EnergyLedger(params), g, 0.5, zeros(g, 1), zeros(g, 2), zeros(g, 2), params)
        with pytest.raises(ValueError):
            self._sample(led, g, 0.5, zeros(g, 1), zeros(g, 2), zeros(g, 2), params)

    def test_record_pair_and_csv(self, tmp_path, params):
        g = Grid(2, 16)
        x, y = g.coordinates()
        V = fft_forward(np.stack([-np.sin(y), np.sin(x)]), g)
        inc = IncompressibleState(0.0, V, V * 0.5)
        led = EnergyLedger(params)
        record_pair(led, embed_incompressible(inc), inc, params, {"extra": 1.0})
        assert led.V_script > 0 and led.M == led.V_script
        text = (tmp_path / "l.csv")
        led.write_csv(text)
        lines = text.read_text().splitlines()
        assert lines[0] == "time,norm,value"
        assert len(lines) == 1 + len(CHANNELS) + 1
        assert lines[-1] == "0.0,extra,1.0"


class TestEnergyBalance:
    def test_zero(self, params):
        g = Grid(2, 8)
        s = IncompressibleState(0.0, zeros(g, 2), zeros(g, 2))
        assert energy_balance_residual([s, IncompressibleState(0.1, s.V, s.B)], params) == 0.0

    def test_empty(self, params):
        with pytest.raises(ValueError):
            energy_balance_residual([], params)

    def test_pure_diffusion(self):
        g = Grid(2, 32)
        x, y = g.coordinates()
        V = fft_forward(1e-6 * np.stack([np.sin(3 * y), 0 * x]), g)
        p = PhysicalParams(mu=0.1, eta=0.1)
        res = energy_balance_residual(trajectory(IncompressibleState(0.0, V, zeros(g, 2)), p, 0.5, 2e-4), p)
        assert res < 1e-8


class TestExplicitBound:
    def test_zero(self, params):
        g = Grid(2, 8)
        assert explicit_M_bound(zeros(g, 2), zeros(g, 2), params) == 0.0

    def test_amplitude_scaling(self):
        g = Grid(2, 16)
        x, y = g.coordinates()
        V = fft_forward(0.01 * np.stack([-np.sin(y), np.sin(x)]), g)
        p = PhysicalParams(mu=1.0, eta=1.0)
        one = explicit_M_bound(V, V, p)
        two = explicit_M_bound(V * 2.0, V * 2.0, p)
        pre = 2 * besov_norm(V, BesovIndex(0.0))
        expo1 = math.log(one / pre)
        assert math.log(two / (2 * pre)) == pytest.approx(16 * expo1, rel=1e-10)

    def test_overflow_is_inf(self):
        g = Grid(2, 16)
        x, y = g.coordinates()
        V = fft_forward(np.stack([-np.sin(y), np.sin(x)]), g)
        assert explicit_M_bound(V, V, PhysicalParams(mu=0.01, eta=0.01)) == math.inf

    def test_three_d_rejected(self, params):
        g = Grid(3, 8)
        with pytest.raises(ValueError):
            explicit_M_bound(zeros(g, 3), zeros(g, 3), params)
