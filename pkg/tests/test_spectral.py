import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_field
from mhdlimit.spectral import (BandLimitError, Grid, MeanProjectedWarning, SpectralField, curl, dealias,
                               diffusion_semigroup, divergence, fft_forward, fft_inverse, gradient,
                               inverse_laplacian_gradient, l2_norm, l2_norm_real, laplacian, leray_P,
                               leray_Q, product)


class TestGrid:
    def test_defaults(self):
        g = Grid(2, 32)
        assert g.box_length == pytest.approx(2 * np.pi)
        assert g.shape == (32, 32)
        assert g.spectral_shape == (32, 17)

    @pytest.mark.parametrize("n", [7, 9, 14, 4, 0])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            Grid(2, n)

    def test_accepts_48(self):
        assert Grid(3, 48).n == 48

    def test_rejects_dim(self):
        with pytest.raises(ValueError):
            Grid(4, 16)

    def test_dealias_mask_counts(self):
        g = Grid(2, 48)
        m = np.abs(np.fft.fftfreq(48, 1 / 48))
        assert g.dealias_mask[m > 16].sum() == 0
        assert g.dealias_mask[m <= 16, :17].all()


def test_round_trip(rng):
    g = Grid(3, 16)
    vals = rng.standard_normal((3,) + g.shape)
    assert np.allclose(fft_inverse(fft_forward(vals, g)), vals, atol=1e-13)


def test_forward_is_unnormalized():
    g = Grid(2, 16)
    f = fft_forward(np.ones(g.shape), g)
    assert f.coeffs[0, 0, 0] == pytest.approx(256)


def test_gradient_of_sine():
    g = Grid(2, 32, 4.0)
    x, y = g.coordinates()
    k = 2 * np.pi / 4.0
    f = fft_forward(np.sin(k * x), g)
    assert np.allclose(gradient(f).real[0], k * np.cos(k * x), atol=1e-12)
    assert np.allclose(gradient(f).real[1], 0, atol=1e-12)


def test_curl_2d_is_scalar():
    g = Grid(2, 32)
    x, y = g.coordinates()
    v = fft_forward(np.stack([-np.sin(y), np.sin(x)]), g)
    w = curl(v)
    assert w.components == 1
    assert np.allclose(w.real[0], np.cos(x) + np.cos(y), atol=1e-12)


def test_div_curl_vanishes(rng):
    g = Grid(3, 16)
    f = random_field(g, rng, 3)
    assert l2_norm(divergence(curl(f))) < 1e-12 * l2_norm(f) * g.n


class TestLeray:
    def test_algebra(self, rng):
        g = Grid(3, 16)
        v = random_field(g, rng, 3)
        P, Q = leray_P(v), leray_Q(v)
        ref = l2_norm(v)
        assert l2_norm(P + Q - v) < 1e-12 * ref
        assert l2_norm(leray_P(P) - P) < 1e-12 * ref
        assert l2_norm(leray_Q(P)) < 1e-12 * ref
        assert l2_norm(divergence(P)) < 1e-10 * ref
        assert l2_norm(curl(Q)) < 1e-10 * ref

    def test_gradient_field_is_pure_Q(self):
        g = Grid(2, 32)
        x, _ = g.coordinates()
        v = gradient(fft_forward(np.cos(2 * x), g))
        assert l2_norm(leray_P(v)) < 1e-13

    def test_orthogonality(self, rng):
        g = Grid(2, 32)
        v = random_field(g, rng, 2)
        P, Q = leray_P(v).real, leray_Q(v).real
        assert abs(np.sum(P * Q)) < 1e-10 * np.sum(v.real**2)


class TestDiffusion:
    def test_forward_decay(self):
        g = Grid(2, 32)
        x, y = g.coordinates()
        f = fft_forward(np.sin(3 * x + 2 * y), g)
        out = diffusion_semigroup(f, 0.1, 0.5)
        assert np.allclose(out.real[0], np.exp(-0.1 * 13 * 0.5) * np.sin(3 * x + 2 * y), atol=1e-13)

    def test_backward_round_trip(self, rng):
        g = Grid(2, 32)
        f = random_field(g, rng, kmax=4)
        back = diffusion_semigroup(f, 0.1, -1.0)
        assert l2_norm(diffusion_semigroup(back, 0.1, 1.0) - f) < 1e-12 * l2_norm(f)

    def test_backward_refuses_unresolved(self, rng):
        g = Grid(2, 32)
        f = fft_forward(rng.standard_normal(g.shape), g)
        with pytest.raises(BandLimitError):
            diffusion_semigroup(f, 0.1, -1.0)


class TestInverseLaplacianGradient:
    def test_single_mode(self):
        g = Grid(2, 32)
        x, _ = g.coordinates()
        out = inverse_laplacian_gradient(fft_forward(np.cos(x), g))
        # ik/|k|^2 on cos x gives -sin x in the first component
        assert np.allclose(out.real[0], -np.sin(x), atol=1e-13)
        assert np.allclose(out.real[1], 0, atol=1e-13)

    def test_divergence_recovers_field(self, rng):
        g = Grid(2, 32)
        a = random_field(g, rng)
        assert l2_norm(divergence(inverse_laplacian_gradient(a)) + a) < 1e-12 * l2_norm(a)

    def test_mean_warns(self):
        g = Grid(2, 16)
        with pytest.warns(MeanProjectedWarning):
            inverse_laplacian_gradient(fft_forward(np.ones(g.shape) * 2.0, g))


def test_product_is_dealiased(rng):
    g = Grid(2, 32)
    f, h = random_field(g, rng), random_field(g, rng)
    p = product(f, h)
    assert np.abs(p.coeffs[:, ~g.dealias_mask]).max() == 0


def test_parseval(rng):
    g = Grid(3, 16, 3.0)
    f = random_field(g, rng, 3)
    assert l2_norm(f) == pytest.approx(l2_norm_real(f.real, g), rel=1e-12)


def test_laplacian_eigen():
    g = Grid(3, 16)
    x, y, z = g.coordinates()
    f = fft_forward(np.sin(x + 2 * z), g)
    assert np.allclose(laplacian(f).real[0], -5 * np.sin(x + 2 * z), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), dim=st.sampled_from([2, 3]))
def test_leray_idempotent_property(seed, dim):
    g = Grid(dim, 8)
    v = random_field(g, np.random.default_rng(seed), dim)
    P = leray_P(v)
    assert l2_norm(leray_P(P) - P) <= 1e-12 * max(l2_norm(v), 1e-300)


def test_dealias_idempotent(rng):
    g = Grid(2, 16)
    f = fft_forward(rng.standard_normal(g.shape), g)
    d = dealias(f)
    assert np.array_equal(dealias(d).coeffs, d.coeffs)
