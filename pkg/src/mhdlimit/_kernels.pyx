# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled interpolation and cell-scan kernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline void _weights(double t, double* w) noexcept nogil:
    w[0] = -t * (t - 1) * (t - 2) / 6
    w[1] = (t + 1) * (t - 1) * (t - 2) / 2
    w[2] = -(t + 1) * t * (t - 2) / 2
    w[3] = (t + 1) * t * (t - 1) / 6


cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    i = i % n
    return i + n if i < 0 else i


def tricubic_periodic(values, points, double spacing):
    cdef double[:, :, :, ::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t m = p.shape[0], nc = f.shape[0]
    cdef Py_ssize_t nx = f.shape[1], ny = f.shape[2], nz = f.shape[3]
    out_arr = np.zeros((m, nc))
    cdef double[:, ::1] out = out_arr
    cdef double wx[4]
    cdef double wy[4]
    cdef double wz[4]
    cdef Py_ssize_t q, c, a, b, d, ix, iy, iz, bx, by, bz
    cdef double sx, sy, sz, wab
    with nogil:
        for q in range(m):
            sx = p[q, 0] / spacing
            sy = p[q, 1] / spacing
            sz = p[q, 2] / spacing
            bx = <Py_ssize_t> floor(sx)
            by = <Py_ssize_t> floor(sy)
            bz = <Py_ssize_t> floor(sz)
            _weights(sx - bx, wx)
            _weights(sy - by, wy)
            _weights(sz - bz, wz)
            for a in range(4):
                ix = _wrap(bx + a - 1, nx)
                for b in range(4):
                    iy = _wrap(by + b - 1, ny)
                    wab = wx[a] * wy[b]
                    for d in range(4):
                        iz = _wrap(bz + d - 1, nz)
                        for c in range(nc):
                            out[q, c] += wab * wz[d] * f[c, ix, iy, iz]
    return out_arr


cdef inline double _min(double a, double b) noexcept nogil:
    return a if a < b else b


cdef inline double _max(double a, double b) noexcept nogil:
    return a if a > b else b


cdef void _cube_extrema(double[:, :, ::1] f, double[:, :, ::1] lo, double[:, :, ::1] hi,
                        double[:, :, ::1] tlo, double[:, :, ::1] thi) noexcept nogil:
    # min and max over the periodic 2x2x2 cube anchored at each node, one axis at a time
    cdef Py_ssize_t nx = f.shape[0], ny = f.shape[1], nz = f.shape[2]
    cdef Py_ssize_t i, j, k, i1, j1, k1
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                k1 = k + 1 if k + 1 < nz else 0
                lo[i, j, k] = _min(f[i, j, k], f[i, j, k1])
                hi[i, j, k] = _max(f[i, j, k], f[i, j, k1])
    for i in range(nx):
        for j in range(ny):
            j1 = j + 1 if j + 1 < ny else 0
            for k in range(nz):
                tlo[i, j, k] = _min(lo[i, j, k], lo[i, j1, k])
                thi[i, j, k] = _max(hi[i, j, k], hi[i, j1, k])
    for i in range(nx):
        i1 = i + 1 if i + 1 < nx else 0
        for j in range(ny):
            for k in range(nz):
                lo[i, j, k] = _min(tlo[i, j, k], tlo[i1, j, k])
                hi[i, j, k] = _max(thi[i, j, k], thi[i1, j, k])


def sign_change_cells(values):
    cdef double[:, :, :, ::1] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t nc = f.shape[0], nx = f.shape[1], ny = f.shape[2], nz = f.shape[3]
    mask_arr = np.ones((nx, ny, nz), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] mask = mask_arr
    cdef double[:, :, ::1] lo = np.empty((nx, ny, nz))
    cdef double[:, :, ::1] hi = np.empty((nx, ny, nz))
    cdef double[:, :, ::1] tlo = np.empty((nx, ny, nz))
    cdef double[:, :, ::1] thi = np.empty((nx, ny, nz))
    cdef Py_ssize_t c, i, j, k
    with nogil:
        for c in range(nc):
            _cube_extrema(f[c], lo, hi, tlo, thi)
            for i in range(nx):
                for j in range(ny):
                    for k in range(nz):
                        if not (hi[i, j, k] > 0 and lo[i, j, k] < 0):
                            mask[i, j, k] = 0
    return np.argwhere(mask_arr).astype(np.int64)
