"""Print the critical delays, Gamma scales and mixed delays for the two reference feedback settings."""
import argparse
import json

from hpaxis.bifurcation import dirac_critical, gamma_critical, mixed_critical
from hpaxis.model import find_equilibrium, reference_params
from hpaxis.stability import check_inequalities

CASES = {"alpha6": (6.0, 1.0, 3.5), "alpha3": (3.0, 0.95, 20.0)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4, help="total Gamma shape")
    ap.add_argument("--mixed-n", type=int, default=2)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    rows = {}
    for name, (alpha, eta, beta_mixed) in CASES.items():
        p = reference_params(alpha, eta)
        e = find_equilibrium(p)
        rep = check_inequalities(p, e)
        d = dirac_critical(p, e, 3)
        g = gamma_critical(p, e, args.n)
        m = mixed_critical(p, e, args.mixed_n, beta_mixed, 1)[0]
        rows[name] = {
            "k1": p.f1.k, "k2": p.f2.k, "k3": p.k3, "a": e.a, "b": e.b, "S": rep.s_value,
            "omega0": d[0].omega, "tau_branches": [pt.parameter for pt in d],
            f"beta_{args.n}": g.parameter, f"gamma_mean_delay": args.n * g.parameter,
            "mixed_beta": beta_mixed, "mixed_tau": m.parameter,
        }
    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
        return
    for name, r in rows.items():
        print(f"[{name}] k1={r['k1']:.5f} k2={r['k2']:.5f} k3={r['k3']:.5f}  S={r['S']:.4f}")
        print(f"  omega0={r['omega0']:.6f}  tau_p={', '.join(f'{t:.4f}' for t in r['tau_branches'])}")
        print(f"  beta_{args.n}={r[f'beta_{args.n}']:.4f} (mean delay {r['gamma_mean_delay']:.3f})")
        print(f"  mixed n={args.mixed_n}, beta={r['mixed_beta']:g}: tau={r['mixed_tau']:.4f}")


if __name__ == "__main__":
    main()
