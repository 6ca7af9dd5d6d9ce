"""Distance to equilibrium of delayed fractional runs versus horizon and initial kick.

Caputo solutions relax algebraically, so whether a run counts as converged at a
fixed horizon depends on the size of the initial perturbation.
"""
import argparse

import numpy as np

from hpaxis.fractional import FracConfig, integrate_fractional
from hpaxis.model import find_equilibrium, reference_params
from hpaxis.simulate import HistoryFunction, detect_oscillation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, nargs="+", default=[0.8, 0.9])
    ap.add_argument("--tau", type=float, default=14.0)
    ap.add_argument("--kick", type=float, nargs="+", default=[0.01, 0.001])
    ap.add_argument("--t-end", type=float, nargs="+", default=[2000.0, 4000.0, 8000.0])
    ap.add_argument("--step", type=float, default=0.5)
    args = ap.parse_args()

    p = reference_params(6.0, 1.0)
    e = find_equilibrium(p)
    eq = np.array(e.state)
    for q in args.q:
        for kick in args.kick:
            for t_end in args.t_end:
                cfg = FracConfig(q, (0.0, args.tau, args.tau, args.tau), args.step, t_end)
                tr = integrate_fractional(p, cfg, HistoryFunction.perturbed(e, kick))
                rep = detect_oscillation(tr, e)
                end = float(np.max(np.abs(tr.x[-1] - eq) / eq))
                print(f"q={q:g} kick={kick:g} t_end={t_end:g}: {rep.verdict:12s} window max={rep.equilibrium_distance:.2e} end={end:.2e}")


if __name__ == "__main__":
    main()
