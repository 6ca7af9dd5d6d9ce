"""Scan the (c, eta = mu) plane and print how many cells fall in each critical-delay bin."""
import argparse
import collections
import time
from pathlib import Path

from hpaxis.bifurcation import region_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[2.0, 3.0, 6.0])
    ap.add_argument("--kind", choices=("dirac", "gamma"), default="dirac")
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--grid", type=int, nargs=2, default=(100, 100))
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=Path, help="directory for one CSV per alpha")
    args = ap.parse_args()

    for alpha in args.alpha:
        t = time.perf_counter()
        g = region_scan(alpha, grid_dims=tuple(args.grid), kind=args.kind, n=args.n, workers=args.workers)
        dt = time.perf_counter() - t
        status = collections.Counter(c.status for c in g.cells)
        bins = collections.Counter(c.bin for c in g.cells if c.bin)
        print(f"alpha={alpha:g} {args.kind}: {dict(status)} in {dt:.1f}s")
        for label in sorted(bins, key=lambda b: float(b[1:].split(",")[0])):
            print(f"  {label:>10s} {bins[label]}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"scan_{args.kind}_alpha{alpha:g}.csv").write_text(g.to_csv())


if __name__ == "__main__":
    main()
