"""Compare the compiled and numpy stencil backends on representative grids.

Run ``python3 benchmarks/bench_stencils.py``; prints the median time per call
for each backend and the speed ratio.
"""
import argparse
import timeit

import numpy as np

from hmcf import shapes, stencils


def bench(fn, repeat, number):
    times = timeit.repeat(fn, repeat=repeat, number=number)
    return float(np.median(times)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["cython"] if stencils.BACKEND == "cython" else [])
    print(f"{'grid':>10} {'kernel':>7} " + " ".join(f"{b:>12}" for b in backends) + "   ratio")
    for n in args.sizes:
        im = shapes.cylinder(n, n, 1.0)
        X, h, s = im.points, im.spacing[1], im.shift[1]
        for name, fn in (("d1", stencils.diff1), ("d2", stencils.diff2)):
            res = {}
            for b in backends:
                out = fn(X, 1, h, True, s, backend=b)
                res[b] = (bench(lambda: fn(X, 1, h, True, s, backend=b), args.repeat, args.number), out)
            if len(backends) == 2:
                assert np.array_equal(res["numpy"][1], res["cython"][1])
            cells = " ".join(f"{res[b][0] * 1e6:10.1f}us" for b in backends)
            ratio = res["numpy"][0] / res["cython"][0] if len(backends) == 2 else float("nan")
            print(f"{n:>4}x{n:<5} {name:>7} {cells}   {ratio:5.2f}x")


if __name__ == "__main__":
    main()
