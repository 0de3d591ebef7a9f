"""Compiled versus pure-Python kernel timings.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``. Prints one
line per kernel with the best-of-N wall time per backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from oamqi import _kernels
from oamqi.quadrature import adaptive_cubature


def _cases(mod):
    rng = np.random.default_rng(0)
    s = np.sort(rng.uniform(0, 1.0, 200_000))
    t = np.sort(rng.uniform(0, 1.0, 200_000))
    centers = 2e-9 * np.arange(-25, 26)

    def panel():
        for _ in range(200):
            mod.h_panel(3, 1.0, 0.9, -0.3, 0.3, -0.3, 0.3)

    def integral():
        adaptive_cubature(lambda *b: mod.h_panel(4, 0.7, 0.63, *b), -3.0, 3.0, -3.0, 3.0, rtol=1e-9)

    def coincidences():
        mod.count_coincidences_many(s, t, centers - 1e-9, centers + 1e-9)

    return {"h_panel x200": panel, "h integral l=4 xi=3": integral, "coincidences 2e5 x 51": coincidences}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _kernels.backends()
    print(f"active backend: {_kernels.BACKEND}; available: {', '.join(backends)}")
    timings = {name: {k: min(timeit.repeat(f, number=1, repeat=args.repeat)) for k, f in _cases(mod).items()}
               for name, mod in backends.items()}
    for case in timings["python"]:
        line = f"{case:28s} python {timings['python'][case] * 1e3:9.2f} ms"
        if "cython" in timings:
            c = timings["cython"][case]
            line += f"   cython {c * 1e3:9.2f} ms   speedup {timings['python'][case] / c:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
