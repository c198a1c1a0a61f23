"""Batched small-matrix solves with backend selection.

The compiled Cython kernel is used when it was built; otherwise the numpy
fallback runs the same elimination. Set ``UNSTABLE_FILTER_BACKEND=python`` to
force the fallback.
"""
import os

import numpy as np

from . import _fallback

#: pivots below this (after row equilibration) mark a system as singular
SINGULAR_RTOL = 1e-13

_forced = os.environ.get("UNSTABLE_FILTER_BACKEND", "").strip().lower()
if _forced == "python":
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        if _forced == "cython":
            raise
        _compiled = None

HAVE_EXTENSION = _compiled is not None
BACKEND = "cython" if HAVE_EXTENSION else "python"


class SingularSystemError(ArithmeticError):
    """A per-point linear system was (numerically) singular.

    ``index`` is the position in the stack; callers usually translate it into
    the offending frequency and store that in ``frequency``.
    """

    def __init__(self, index, frequency=None, message=None):
        self.index = index
        self.frequency = frequency
        if message is None:
            if frequency is None:
                message = "singular system at stack index %d" % index
            else:
                message = "singular system at Omega = %.9g rad/s (f = %.9g Hz)" % (
                    frequency, frequency / (2 * np.pi))
        super().__init__(message)


def solve_stack(a, b, backend=None, rtol=SINGULAR_RTOL):
    """Solve a stack of linear systems ``a[i] @ x[i] = b[i]``.

    Parameters
    ----------
    a : (n, k, k) complex array
    b : (n, k) or (n, k, m) complex array
    backend : {"cython", "python", None}
        ``None`` picks the compiled kernel when available.

    Raises
    ------
    SingularSystemError
        For the first system whose relative pivot is below ``rtol``.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    vector = b.ndim == 2
    if vector:
        b = b[:, :, None]
    if a.ndim != 3 or a.shape[1] != a.shape[2] or b.shape[:2] != a.shape[:2]:
        raise ValueError("shape mismatch: a %s, b %s" % (a.shape, b.shape))

    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        x, bad = _compiled.solve_stack(a, b, rtol)
    elif backend == "python":
        x, bad = _fallback.solve_stack(a, b, rtol)
    else:
        raise ValueError("unknown backend %r" % backend)
    if bad >= 0:
        raise SingularSystemError(bad)
    return x[:, :, 0] if vector else x


def solve_on_grid(a, b, grid, backend=None):
    """``solve_stack`` that reports singular points by their frequency."""
    try:
        return solve_stack(a, b, backend=backend)
    except SingularSystemError as err:
        raise SingularSystemError(err.index, float(np.asarray(grid)[err.index])) from None
