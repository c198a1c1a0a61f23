# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel: batched Gaussian elimination for stacks of small complex systems.

Mirrors ``_fallback.solve_stack`` step for step (row equilibration, partial
pivoting, relative pivot threshold) so both backends flag the same points.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double cabs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def solve_stack(a, b, double rtol):
    """Solve ``a[i] @ x[i] = b[i]`` for every ``i``.

    Returns ``(x, bad)`` where ``bad`` is the index of the first system whose
    relative pivot fell below ``rtol`` (or -1 if none).
    """
    cdef double complex[:, :, ::1] A = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, :, ::1] X = np.array(b, dtype=np.complex128, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0], k = A.shape[1], m = X.shape[2]
    cdef Py_ssize_t s, i, j, r, col, p
    cdef double best, v, scale, rtol2 = rtol * rtol
    cdef double complex inv, f, tmp
    cdef Py_ssize_t bad = -1

    with nogil:
        for s in range(n):
            # row equilibration
            for i in range(k):
                scale = 0.0
                for j in range(k):
                    v = cabs2(A[s, i, j])
                    if v > scale:
                        scale = v
                if scale == 0.0:
                    bad = s
                    break
                scale = 1.0 / sqrt(scale)
                for j in range(k):
                    A[s, i, j] = A[s, i, j] * scale
                for j in range(m):
                    X[s, i, j] = X[s, i, j] * scale
            if bad >= 0:
                break
            for col in range(k):
                p = col
                best = cabs2(A[s, col, col])
                for r in range(col + 1, k):
                    v = cabs2(A[s, r, col])
                    if v > best:
                        best = v
                        p = r
                if best <= rtol2:
                    bad = s
                    break
                if p != col:
                    for j in range(k):
                        tmp = A[s, col, j]
                        A[s, col, j] = A[s, p, j]
                        A[s, p, j] = tmp
                    for j in range(m):
                        tmp = X[s, col, j]
                        X[s, col, j] = X[s, p, j]
                        X[s, p, j] = tmp
                # one reciprocal per pivot instead of a complex division per row
                inv = A[s, col, col].conjugate() / best
                for r in range(col + 1, k):
                    f = A[s, r, col] * inv
                    if f == 0:
                        continue
                    for j in range(col, k):
                        A[s, r, j] = A[s, r, j] - f * A[s, col, j]
                    for j in range(m):
                        X[s, r, j] = X[s, r, j] - f * X[s, col, j]
            if bad >= 0:
                break
            # back substitution
            for j in range(m):
                for i in range(k - 1, -1, -1):
                    tmp = X[s, i, j]
                    for r in range(i + 1, k):
                        tmp = tmp - A[s, i, r] * X[s, r, j]
                    X[s, i, j] = tmp * (A[s, i, i].conjugate() / cabs2(A[s, i, i]))

    return np.asarray(X), bad
