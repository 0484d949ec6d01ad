import numpy as np
import pytest

from mhdlimit.dynamics import IncompressibleState, PhysicalParams, integrate, rhs_imhd
from mhdlimit.reconnection import (BeltramiSpec, ReconnectionData, abc_beltrami, alfven_transport_check,
                                   build_reconnection_data, find_nulls, perturbation, scan_nulls,
                                   topology_report, trace_field_line, write_lines_csv, write_null_csv)
from mhdlimit.reconnection.evaluation import FieldProbe, SpectralEvaluator, TricubicEvaluator
from mhdlimit.spectral import (Grid, SpectralField, curl, diffusion_semigroup, divergence, fft_forward,
                               l2_norm)


class TestBeltrami:
    def test_unit_case(self):
        g = Grid(3, 16)
        b = abc_beltrami(BeltramiSpec(1, 0, 0, 1), g)
        x, y, z = g.coordinates()
        assert np.allclose(b.real, np.stack([np.sin(z), np.cos(z), 0 * z]), atol=1e-14)
        assert l2_norm(curl(b) - b) < 1e-10 * l2_norm(b)

    @pytest.mark.parametrize("abc,N", [((1, 1, 1), 1), ((1, 0.1, 0.1), 2), ((0.3, 0.7, 1.1), 4)])
    def test_eigenfield(self, abc, N):
        g = Grid(3, 16)
        b = abc_beltrami(BeltramiSpec(*abc, N=N), g)
        assert l2_norm(curl(b) - b * N) < 1e-10 * l2_norm(b)
        assert l2_norm(divergence(b)) < 1e-12 * l2_norm(b)

    def test_no_zeros(self):
        b = abc_beltrami(BeltramiSpec(1, 0.1, 0.1, 2), Grid(3, 16))
        assert np.sqrt(np.sum(b.real**2, axis=0)).min() > 0.5

    def test_unresolved(self):
        with pytest.raises(ValueError):
            abc_beltrami(BeltramiSpec(N=6), Grid(3, 16))

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            BeltramiSpec(N=0)


class TestEvaluation:
    def test_spectral_matches_grid(self):
        g = Grid(3, 16)
        b = abc_beltrami(BeltramiSpec(1, 0.5, 0.2), g)
        pts = np.array([[0.3, 1.1, 2.5], [6.0, 0.0, 4.4]])
        x, y, z = pts.T
        exact = np.stack([np.sin(z) + 0.2 * np.cos(y), 0.5 * np.sin(x) + np.cos(z), 0.2 * np.sin(y) + 0.5 * np.cos(x)], 1)
        assert np.allclose(SpectralEvaluator(g, b.coeffs)(pts), exact, atol=1e-13)
        assert np.allclose(TricubicEvaluator(g, b.coeffs)(pts), exact, atol=1e-3)

    def test_jacobian_trace_free(self):
        g = Grid(3, 16)
        probe = FieldProbe(abc_beltrami(BeltramiSpec(1, 0.5, 0.2), g))
        J = probe.jacobian(np.array([[0.1, 0.2, 0.3]]))[0]
        assert abs(np.trace(J)) < 1e-12


class TestNulls:
    def test_abc_eight_nulls(self):
        g = Grid(3, 32)
        nulls = find_nulls(abc_beltrami(BeltramiSpec(1, 1, 1, 1), g))
        assert len(nulls) == 8
        assert all(n.hyperbolic for n in nulls)
        grad_sup = FieldProbe(abc_beltrami(BeltramiSpec(1, 1, 1, 1), g)).grad_sup
        for n in nulls:
            assert abs(np.trace(n.jacobian)) < 1e-6 * grad_sup
            assert n.residual < 1e-10 * 3

    def test_constant_field(self):
        g = Grid(3, 16)
        b = fft_forward(np.stack([np.ones(g.shape), 0.5 * np.ones(g.shape), 0 * np.ones(g.shape)]), g)
        assert find_nulls(b) == []

    def test_linear_model(self):
        g = Grid(3, 32)
        c = np.pi
        x, y, z = g.coordinates()
        env = np.exp((np.cos(x - c) + np.cos(y - c) + np.cos(z - c) - 3))
        vals = np.stack([np.sin(x - c), np.sin(y - c), -2 * np.sin(z - c)]) * env
        nulls = find_nulls(fft_forward(vals, g))
        centre = [n for n in nulls if np.linalg.norm(n.location - c) < 1e-6]
        assert len(centre) == 1
        eig = np.sort(centre[0].eigenvalues.real)
        assert np.allclose(eig, [-2, 1, 1], atol=1e-6)
        assert centre[0].hyperbolic

    def test_deterministic(self):
        g = Grid(3, 16)
        b = abc_beltrami(BeltramiSpec(1, 1, 1), g)
        a1 = [n.location for n in find_nulls(b)]
        a2 = [n.location for n in find_nulls(b)]
        assert np.array_equal(np.array(a1), np.array(a2))

    def test_null_csv(self, tmp_path):
        g = Grid(3, 16)
        p = write_null_csv(tmp_path / "n.csv", find_nulls(abc_beltrami(BeltramiSpec(), g)))
        lines = p.read_text().splitlines()
        assert lines[0].startswith("x,y,z,eig_re_1") and len(lines) == 9


class TestTracing:
    def test_uniform(self):
        L = 2 * np.pi
        line = trace_field_line(lambda p: np.tile([1.0, 0, 0], (len(p), 1)), [0.0, 0.0, 0.0], 10.0,
                                box_length=L)
        assert line.termination == "length budget"
        assert np.allclose(line.points[:, 0], np.mod(line.s, L), atol=1e-9)

    def test_rotation(self):
        c = np.pi
        rot = lambda p: np.stack([-(p[:, 1] - c), p[:, 0] - c, 0 * p[:, 0]], 1)
        seed = np.array([c + 1.5, c, 0.2])
        line = trace_field_line(rot, seed, 2 * np.pi, tol=1e-10)
        assert np.linalg.norm(line.unwrapped[-1] - seed) < 1e-6
        assert line.arc_length[-1] == pytest.approx(2 * np.pi * 1.5, abs=1e-6)
        assert line.ode_residual(rot) < 1e-9

    def test_abc_plane_invariance(self):
        g = Grid(3, 16)
        line = trace_field_line(abc_beltrami(BeltramiSpec(1, 0, 0), g), [0.3, 0.1, 0.9], 20.0, tol=1e-10)
        assert np.abs(line.unwrapped[:, 2] - 0.9).max() < 1e-8

    def test_stops_at_null(self):
        lin = lambda p: -p
        line = trace_field_line(lin, [1.0, 0.5, 0.2], 100.0, null_tol=1e-4)
        assert line.termination == "null proximity"

    def test_csv(self, tmp_path):
        line = trace_field_line(lambda p: np.tile([1.0, 0, 0], (len(p), 1)), [0, 0, 0], 1.0, n_samples=3)
        rows = write_lines_csv(tmp_path / "l.csv", [line]).read_text().splitlines()
        assert rows[0] == "line_id,s,x,y,z" and len(rows) == 4


class TestData:
    def test_zero_epsilon(self):
        g = Grid(3, 32)
        p = PhysicalParams(mu=0.1, eta=0.1)
        V0, B0 = build_reconnection_data(ReconnectionData(epsilon=0.0, N=4), g, p)
        assert l2_norm(V0 - B0) == 0
        assert l2_norm(divergence(V0)) < 1e-12 * l2_norm(V0)

    def test_semigroup_round_trip(self):
        g = Grid(3, 32)
        p = PhysicalParams(mu=0.1, eta=0.1)
        rd = ReconnectionData(M=0.0, epsilon=0.1, N=4, T=1.0)
        with pytest.warns(RuntimeWarning):
            _, B0 = build_reconnection_data(rd, g, p)
        fwd = diffusion_semigroup(B0, p.eta, rd.T)
        target = perturbation(rd, g) * rd.epsilon
        assert l2_norm(fwd - target) < 1e-8 * l2_norm(target)

    def test_default_recipe_nulls(self):
        g = Grid(3, 32)
        p = PhysicalParams(mu=0.1, eta=0.1)
        rd = ReconnectionData(N=8, epsilon=0.01)
        _, B0 = build_reconnection_data(rd, g, p)
        assert scan_nulls(B0).hyperbolic_count == 0
        assert scan_nulls(perturbation(rd, g)).hyperbolic_count >= 1

    def test_alignment_preserved(self):
        g = Grid(3, 16)
        p = PhysicalParams(mu=0.1, eta=0.1)
        V0, B0 = build_reconnection_data(ReconnectionData(epsilon=0.0, N=3, M=0.3), g, p)
        out = integrate(IncompressibleState(0.0, V0, B0), p, 0.1, 0.01)
        assert l2_norm(out.V - out.B) < 1e-12 * l2_norm(out.V)


class TestAlfven:
    def test_no_flow(self):
        g = Grid(3, 16)
        b0 = abc_beltrami(BeltramiSpec(1, 0.5, 0.2), g)
        z = SpectralField(g, np.zeros_like(b0.coeffs))
        seeds = np.random.default_rng(0).uniform(0, 6, (10, 3))
        hist = [(0.0, z, z), (0.5, z, z)]
        assert alfven_transport_check(hist, b0, b0, seeds).residual < 1e-14

    def test_rigid_rotation(self):
        # v = (-(y - c), x - c, 0) localized: use a solid rotation on the plane through a constant field
        g = Grid(3, 16)
        ones = np.ones(g.shape)
        b0 = fft_forward(np.stack([ones, 0 * ones, 0 * ones]), g)
        x, y, z = g.coordinates()
        # uniform translation: Φ = x + t e2, ∇Φ = I, so b stays put
        v = fft_forward(np.stack([0 * ones, ones, 0 * ones]), g)
        zero = SpectralField(g, np.zeros_like(v.coeffs))
        seeds = np.random.default_rng(1).uniform(0, 6, (5, 3))
        res = alfven_transport_check([(0.0, v, zero), (0.25, v, zero), (0.5, v, zero)], b0, b0, seeds)
        assert res.residual < 1e-12
        assert np.allclose(res.positions[:, 1], seeds[:, 1] + 0.5)

    def test_ideal_small_run(self):
        g = Grid(3, 16)
        x, y, z = g.coordinates()
        V = fft_forward(np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), 0 * x]), g)
        B = abc_beltrami(BeltramiSpec(1, 0.6, 0.3), g) * 0.5
        p = PhysicalParams(mu=0.05, eta=0.0)
        from mhdlimit.dynamics import trajectory

        box = {}

        def hist():
            for s in trajectory(IncompressibleState(0.0, V, B), p, 0.2, 5e-3, every=2):
                box["s"] = s
                yield s.time, s.V, rhs_imhd(s, p)[0]

        seeds = np.random.default_rng(2).uniform(0, 2 * np.pi, (20, 3))
        res = alfven_transport_check(hist(), B, lambda: box["s"].B, seeds)
        assert res.residual < 1e-3


class TestTopology:
    def test_identical(self):
        g = Grid(3, 16)
        b = abc_beltrami(BeltramiSpec(), g)
        rep = topology_report(b, b)
        assert not rep.certified
        assert "none" in rep.text()

    def test_count_change(self):
        g = Grid(3, 16)
        rep = topology_report(abc_beltrami(BeltramiSpec(1, 0.1, 0.1), g), abc_beltrami(BeltramiSpec(), g),
                              seeds=np.array([[1.0, 2.0, 3.0]]), s_max=2.0)
        assert rep.certified and rep.counts == (0, 8)
        assert len(rep.lines0) == 1 and "RECONNECTION" in rep.text()
