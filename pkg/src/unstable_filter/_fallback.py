"""Pure numpy fallback for the compiled kernels.

Same algorithm as ``_kernels.pyx`` (row equilibration, partial pivoting,
relative pivot threshold), vectorised across the stack instead of looped.
"""
import numpy as np


def solve_stack(a, b, rtol):
    A = np.array(a, dtype=np.complex128, copy=True)
    X = np.array(b, dtype=np.complex128, copy=True)
    n, k, _ = A.shape
    bad = np.zeros(n, dtype=bool)

    scale = np.abs(A).max(axis=2)
    zero = scale == 0.0
    bad |= zero.any(axis=1)
    scale[zero] = 1.0
    A /= scale[:, :, None]
    X /= scale[:, :, None]

    idx = np.arange(n)
    for col in range(k):
        p = col + np.argmax(np.abs(A[:, col:, col]), axis=1)
        piv_abs = np.abs(A[idx, p, col])
        bad |= piv_abs <= rtol
        swap = p != col
        if swap.any():
            s = idx[swap]
            rows_p, rows_c = A[s, p[swap]].copy(), A[s, col].copy()
            A[s, col], A[s, p[swap]] = rows_p, rows_c
            rhs_p, rhs_c = X[s, p[swap]].copy(), X[s, col].copy()
            X[s, col], X[s, p[swap]] = rhs_p, rhs_c
        piv = A[:, col, col].copy()
        piv[bad] = 1.0
        f = A[:, col + 1:, col] / piv[:, None]
        A[:, col + 1:, col:] -= f[:, :, None] * A[:, None, col, col:]
        X[:, col + 1:, :] -= f[:, :, None] * X[:, None, col, :]

    if bad.any():
        return X, int(np.flatnonzero(bad)[0])

    for i in range(k - 1, -1, -1):
        acc = X[:, i, :] - np.einsum("nr,nrm->nm", A[:, i, i + 1:], X[:, i + 1:, :])
        X[:, i, :] = acc / A[:, i, i][:, None]
    return X, -1
