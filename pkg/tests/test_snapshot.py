import numpy as np
import pytest

from mhdlimit.snapshot import MAGIC, load_field, read_snapshot, write_snapshot
from mhdlimit.spectral import Grid, fft_forward, l2_norm


def test_round_trip(tmp_path, rng):
    g = Grid(2, 16)
    vals = rng.standard_normal((2,) + g.shape)
    p = write_snapshot(tmp_path / "f.snap", vals, 0.75, grid=g)
    grid, t, back = read_snapshot(p)
    assert grid == g and t == 0.75
    assert np.array_equal(back, vals)


def test_spectral_round_trip(tmp_path):
    g = Grid(3, 8)
    x, y, z = g.coordinates()
    f = fft_forward(np.sin(x) * np.cos(z), g)
    write_snapshot(tmp_path / "s.snap", f, 1.0)
    back, t = load_field(tmp_path / "s.snap")
    assert l2_norm(back - f) < 1e-14


def test_bad_magic(tmp_path):
    g = Grid(2, 8)
    p = write_snapshot(tmp_path / "f.snap", np.zeros(g.shape), 0.0, grid=g)
    raw = bytearray(p.read_bytes())
    raw[: len(MAGIC)] = b"XXXXXXXX"
    p.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="magic"):
        read_snapshot(p)


@pytest.mark.parametrize("keep", [10, 100])
def test_truncated(tmp_path, keep):
    g = Grid(2, 8)
    p = write_snapshot(tmp_path / "f.snap", np.ones(g.shape), 0.0, grid=g)
    p.write_bytes(p.read_bytes()[:keep])
    with pytest.raises(ValueError):
        read_snapshot(p)


def test_shape_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_snapshot(tmp_path / "f.snap", np.zeros((8, 9)), 0.0, grid=Grid(2, 8))
