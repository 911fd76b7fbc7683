"""Time the numpy and Cython level-set kernels against each other.

    python3 benchmarks/bench_kernels.py --size 512 --repeat 5
"""

import argparse
import timeit

import numpy as np

from tumorseg import acwe, kernels
from tumorseg.phantoms import disk_phantom, generate


def _best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_backend(mod, size, repeat):
    rng = np.random.default_rng(0)
    u = np.zeros((size, size), dtype=np.uint8)
    u[size // 4 : 3 * size // 4, size // 4 : 3 * size // 4] = 1
    img = rng.random((size, size))
    # the segment timing routes acwe through this backend
    saved = {n: getattr(kernels, n) for n in ("curvature_smooth", "band_update")}
    for n in saved:
        setattr(kernels, n, getattr(mod, n))
    phantom, _, box = generate(disk_phantom(size=512, radius=40, sigma=0.1, seed=1))
    try:
        return {
            "smooth x8": _best(lambda: mod.curvature_smooth(u, 8), repeat, 3),
            "band_update": _best(lambda: mod.band_update(img, u, 0.3, 0.7, 1.0, 1.0), repeat, 3),
            "segment 512 phantom": _best(lambda: acwe.segment(phantom, box), repeat, 1),
        }
    finally:
        for n, fn in saved.items():
            setattr(kernels, n, fn)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512, help="square window side for the kernel timings")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    names = kernels.available_backends()
    results = {name: bench_backend(kernels.load_backend(name), args.size, args.repeat) for name in names}
    cases = list(next(iter(results.values())))
    print(f"{'case':<22}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for case in cases:
        row = f"{case:<22}" + "".join(f"{results[n][case] * 1e3:>10.2f}ms" for n in names)
        if len(names) > 1:
            row += f"{results['python'][case] / results['cython'][case]:>11.1f}x"
        print(row)
    if len(names) == 1:
        print("compiled backend not built; only the numpy kernels were timed")


if __name__ == "__main__":
    main()
