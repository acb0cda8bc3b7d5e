"""Compare the compiled Jacobi kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import timeit

import numpy as np

from dampcode import _kernels_py

try:
    from dampcode import _kernels
except ImportError:  # extension not built
    _kernels = None


def random_hermitian(n, rng):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return m + m.conj().T


def random_tall(m, n, rng):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


def bench(fn, arg, repeats):
    t = timeit.repeat(lambda: fn(arg), number=1, repeat=repeats)
    return min(t)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    else:
        print("compiled extension not available; timing the fallback only")

    cases = []
    for n in (2, 4, 8, 16):
        cases.append((f"eigh {n}x{n}", "herm_eig_jacobi", random_hermitian(n, rng)))
    for m, n in ((4, 2), (4, 4), (16, 8)):
        cases.append((f"svd {m}x{n}", "svd_jacobi", random_tall(m, n, rng)))

    print(f"{'case':<14}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}")
    for label, fname, a in cases:
        times = [bench(getattr(mod, fname), a, args.repeats) for _, mod in backends]
        row = f"{label:<14}" + "".join(f"{t * 1e6:>11.1f} us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
