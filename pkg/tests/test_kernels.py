import os
import subprocess
import sys

import numpy as np
import pytest

from mhdlimit import _kernels_py, kernels

compiled = pytest.importorskip("mhdlimit._kernels")


def _field(rng, c=2, n=12):
    return rng.standard_normal((c, n, n, n))


def test_tricubic_agrees(rng):
    vals = _field(rng)
    pts = rng.uniform(-1, 8, (200, 3))
    h = 2 * np.pi / 12
    a = compiled.tricubic_periodic(vals, pts, h)
    b = _kernels_py.tricubic_periodic(vals, pts, h)
    assert np.allclose(a, b, atol=1e-12)


def test_tricubic_nodes_exact(rng):
    vals = _field(rng, 1, 8)
    h = 0.5
    idx = np.array([[0, 0, 0], [3, 7, 1], [7, 7, 7]])
    out = kernels.tricubic_periodic(vals, idx * h, h)
    assert np.allclose(out[:, 0], vals[0][tuple(idx.T)])


def test_tricubic_reproduces_cubics():
    n, h = 16, 0.25
    i = np.arange(n) * h
    X, Y, Z = np.meshgrid(i, i, i, indexing="ij")
    f = lambda x, y, z: x**3 - 2 * x * y + z**2 * y
    pts = np.array([[1.3, 1.7, 2.1], [2.05, 1.01, 1.5]])
    out = kernels.tricubic_periodic(f(X, Y, Z)[None], pts, h)[:, 0]
    assert np.allclose(out, f(*pts.T), atol=1e-10)


def test_sign_change_agrees(rng):
    vals = _field(rng, 3, 10)
    a = compiled.sign_change_cells(vals)
    b = _kernels_py.sign_change_cells(vals)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_sign_change_constant():
    vals = np.ones((3, 6, 6, 6))
    assert len(kernels.sign_change_cells(vals)) == 0


def test_env_forces_fallback():
    env = dict(os.environ, MHDLIMIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from mhdlimit import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND == "compiled"
