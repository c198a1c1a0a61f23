"""Compare the compiled stack solver with the numpy fallback.

    python3 benchmarks/bench_solve.py [--repeat N]

Times batched solves at the sizes the package uses (3x3 for the RWA chain,
9x9 for the four-sideband system) against ``numpy.linalg.solve``, then the
end-to-end four-sideband noise budget with each backend.
"""
import argparse
import timeit

import numpy as np

from unstable_filter import linalg
from unstable_filter.coupled import log_grid
from unstable_filter.params import nominal_filter, nominal_ifo
from unstable_filter.rigorous import total_noise


def _stack(rng, n, k, m):
    a = rng.normal(size=(n, k, k)) + 1j * rng.normal(size=(n, k, k))
    b = rng.normal(size=(n, k, m)) + 1j * rng.normal(size=(n, k, m))
    return a, b


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args(argv)

    backends = ["python"] + (["cython"] if linalg.HAVE_EXTENSION else [])
    if not linalg.HAVE_EXTENSION:
        print("compiled kernel not built; timing the fallback only")
    rng = np.random.default_rng(0)

    print("%-22s %12s %12s %12s" % ("case", "numpy.solve", "python", "cython"))
    for n, k, m in [(301, 3, 4), (301, 9, 7), (10_000, 3, 4), (10_000, 9, 7)]:
        a, b = _stack(rng, n, k, m)
        row = [_best(lambda: np.linalg.solve(a, b), args.repeat)]
        for be in ("python", "cython"):
            if be in backends:
                row.append(_best(lambda: linalg.solve_stack(a, b, backend=be), args.repeat))
            else:
                row.append(float("nan"))
        print("%-22s %10.3f ms %10.3f ms %10.3f ms" % (
            "n=%d, %dx%d, %d rhs" % (n, k, k, m), *(1e3 * t for t in row)))

    filt, ifo = nominal_filter(), nominal_ifo()
    for label, grid in [("default grid", log_grid()), ("1 Hz-100 kHz x1000/dec",
                                                       log_grid(1, 1e5, 1000))]:
        times = []
        for be in ("python", "cython"):
            if be in backends:
                times.append(_best(lambda: total_noise(filt, ifo, grid, backend=be),
                                   max(3, args.repeat // 2)))
            else:
                times.append(float("nan"))
        print("%-22s %12s %10.3f ms %10.3f ms" % (
            "total_noise, " + label[:9], "", *(1e3 * t for t in times)))


if __name__ == "__main__":
    main()
