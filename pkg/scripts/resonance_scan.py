"""Resonance function and roots over omega2 for a few harmonics (CSV on stdout).

Columns: alpha, omega2, F (the resonance residual), is_root.  Roots are the
ones returned by find_resonances; F is sampled on a log grid for plotting.
"""
import argparse
import csv
import sys

import numpy as np

from sccqed.model import ModelParams
from sccqed.rwa import find_resonances, resonance_function


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g1", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--g2", type=float, default=2.4e-4)
    ap.add_argument("--omega1", type=float, default=0.37)
    ap.add_argument("--alphas", default="-3,-1,1,3")
    ap.add_argument("--lo", type=float, default=1e-4)
    ap.add_argument("--hi", type=float, default=1e-1)
    ap.add_argument("--points", type=int, default=2000)
    args = ap.parse_args(argv)

    p = ModelParams(1.0, args.g1, args.g2, args.delta, (args.omega1, 1.0))
    grid = np.geomspace(args.lo, args.hi, args.points)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["alpha", "omega2", "F", "is_root"])
    for alpha in (int(a) for a in args.alphas.split(",")):
        F = resonance_function(0, p, alpha, grid)
        for x, f in zip(grid, np.atleast_1d(F)):
            w.writerow([alpha, format(x, ".17g"), format(f, ".17g"), 0])
        for r in find_resonances(0, p, alpha, args.lo, args.hi):
            w.writerow([alpha, format(r.omega2, ".17g"), format(r.residual, ".17g"), 1])


if __name__ == "__main__":
    main()
