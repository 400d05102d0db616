"""Where the alpha = 1 resonances sit at the headline parameters, and what an
exact run over one Rabi period would cost.

Prints one line per bracket: root count, strongest R, R/omega2, the Rabi
period, and the wall time projected from a short timed integration.
"""
import argparse
import math
import time

import numpy as np

from sccqed.bosonic import FockTruncation
from sccqed.cat_frame import cat_basis
from sccqed.model import ModelParams
from sccqed.propagator import integrate
from sccqed.rwa import find_resonances, rwa_reduce


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega1", type=float, default=0.7)
    ap.add_argument("--probe", type=float, default=2000.0, help="timed integration length")
    args = ap.parse_args(argv)

    p = ModelParams(1.0, 0.2, 0.05, 0.005, (args.omega1, 1.0))
    tr = FockTruncation(48, 12)
    brackets = [(None, None), (1e-7, 1e-6), (1.105e-7, 1.2e-7)]
    last = None
    for lo, hi in brackets:
        t0 = time.perf_counter()
        roots = find_resonances(0, p, 1, lo, hi)
        label = "default" if lo is None else f"[{lo:g}, {hi:g}]"
        if not roots:
            print(f"{label:>22}: no roots ({time.perf_counter() - t0:.1f}s)")
            continue
        best = max(roots, key=lambda s: abs(rwa_reduce(0, p, s, warn=False).rabi_rate))
        R = rwa_reduce(0, p, best, warn=False).rabi_rate
        print(f"{label:>22}: {len(roots)} roots, omega2 {best.omega2:.5g}, Gamma2 {best.gamma2:.4g}, "
              f"R {R:.3g}, R/omega2 {R / best.omega2:.3g}, period {2 * math.pi / abs(R):.3g}")
        last = best
    if last is not None:
        q = last.apply(p)
        psi0 = cat_basis(0, q, tr)[0].vector
        t0 = time.perf_counter()
        integrate(q, tr, psi0, (0.0, args.probe), 1e-9, t_eval=np.linspace(0, args.probe, 3))
        rate = (time.perf_counter() - t0) / args.probe
        R = rwa_reduce(0, p, last, warn=False).rabi_rate
        print(f"exact run: {rate:.3g} s per unit time -> {rate * 2 * math.pi / abs(R):.3g} s per period")


if __name__ == "__main__":
    main()
