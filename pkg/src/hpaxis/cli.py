"""Command-line front end: ``hpaxis <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 no bifurcation (I2 regime), 4 solver failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import bifurcation, stability
from .config import NG_TO_PG, ConfigError, FeedbackSpec, Physiology, RunConfig, load_config, load_scenario
from .errors import DomainError, GridError, NoRootError, NumericalError, PreconditionError, UnsupportedKernelError
from .fractional import FracConfig, integrate_fractional
from .kernels import KernelSet
from .model import find_equilibrium
from .simulate import HistoryFunction, detect_oscillation, integrate_kernels

EXIT_OK, EXIT_INVALID, EXIT_NO_BIFURCATION, EXIT_SOLVER = 0, 2, 3, 4


def _clean(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, cfg: RunConfig, filename: str, text: str):
    out_dir = args.output_dir or cfg.output_dir
    if out_dir:
        write_atomic(Path(out_dir) / filename, text)
    sys.stdout.write(text)


# --- configuration assembly ---------------------------------------------------


def _resolve_config(args) -> RunConfig:
    if args.config and args.scenario:
        raise ConfigError("config: give either --config or --scenario, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.scenario:
        cfg = load_scenario(args.scenario)
    else:
        cfg = RunConfig()
    fb_over = {
        k: getattr(args, k) for k in ("alpha", "eta", "mu") if getattr(args, k, None) is not None
    }
    if args.c_pg_ml is not None and args.c_ng_ml is not None:
        raise ConfigError("feedback: give only one of --c-pg-ml, --c-ng-ml")
    if args.c_pg_ml is not None:
        fb_over["c_pg_ml"] = args.c_pg_ml
    if args.c_ng_ml is not None:
        fb_over["c_pg_ml"] = args.c_ng_ml * NG_TO_PG
    if "eta" in fb_over and "mu" not in fb_over:
        fb_over["mu"] = fb_over["eta"]
    if fb_over:
        if cfg.feedback is not None:
            fb = replace(cfg.feedback, **fb_over)
        else:
            missing = {"alpha", "eta", "c_pg_ml"} - set(fb_over)
            if missing:
                raise ConfigError(f"feedback: missing {sorted(missing)}")
            fb = FeedbackSpec(fb_over["alpha"], fb_over["eta"], fb_over["mu"], fb_over["c_pg_ml"])
        cfg = replace(cfg, feedback=fb, params=None)
    if args.reference_physiology and cfg.physiology is None:
        cfg = replace(cfg, physiology=Physiology.reference())
    return cfg


def _model(cfg: RunConfig):
    p = cfg.system_params()
    return p, find_equilibrium(p)


def _kernels_arg(value: str) -> KernelSet:
    text = value
    if not value.lstrip().startswith("{"):
        text = Path(value).read_text()
    try:
        return KernelSet.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"kernels: invalid JSON ({exc})") from exc
    except DomainError as exc:
        raise ConfigError(f"kernels: {exc}") from exc


# --- subcommands ----------------------------------------------------------------


def cmd_fit(args) -> int:
    cfg = _resolve_config(args)
    if cfg.physiology is None and cfg.params is None:
        raise ConfigError("physiology: required block is missing")
    p, e = _model(cfg)
    rep = stability.check_inequalities(p, e)
    out = {
        "scenario": cfg.scenario,
        "params": p.to_dict(),
        "equilibrium": e.to_dict(),
        "feedback_at_equilibrium": {"f1": p.f1(e.x3), "f2": p.f2(e.x3)},
        "stability": rep.to_dict(),
    }
    _emit(args, cfg, "fit.json", dumps(out))
    return EXIT_OK


def cmd_stability(args) -> int:
    cfg = _resolve_config(args)
    p, e = _model(cfg)
    out = stability.check_inequalities(p, e).to_dict()
    q = args.q if args.q is not None else cfg.solver.q
    if q is not None:
        out["matignon"] = {"q": q, "stable": stability.matignon_check(p, e, q)}
    _emit(args, cfg, "stability.json", dumps(out))
    return EXIT_OK


def cmd_critical(args) -> int:
    cfg = _resolve_config(args)
    p, e = _model(cfg)
    crit = cfg.critical
    kind = args.kind or crit.kind
    n = args.n if args.n is not None else crit.n
    beta = args.beta if args.beta is not None else crit.beta_min
    branches = args.branches if args.branches is not None else crit.branches
    if kind is None and cfg.kernels is not None:
        pts = bifurcation.critical_for_kernels(p, e, cfg.kernels, branches)
    else:
        kind = kind or "dirac"
        if kind == "dirac":
            pts = bifurcation.dirac_critical(p, e, branches)
        elif kind == "gamma":
            pts = [bifurcation.gamma_critical(p, e, n)]
        else:
            if beta is None:
                raise ConfigError("critical.beta_min: required for kind 'mixed'")
            pts = bifurcation.mixed_critical(p, e, n, beta, branches)
    _emit(args, cfg, "critical.json", dumps([pt.to_dict() for pt in pts]))
    return EXIT_OK


def cmd_region_scan(args) -> int:
    # the scan sweeps c and eta itself; only alpha is taken from the command line
    alpha, args.alpha = args.alpha, None
    cfg = _resolve_config(args)
    sc = cfg.scan
    if alpha is None:
        alpha = sc.alpha
    if alpha is None:
        alpha = cfg.feedback.alpha if cfg.feedback else None
    if alpha is None:
        raise ConfigError("scan.alpha: required")
    phys = (cfg.physiology or Physiology.reference()).as_fit_kwargs()
    workers = int(os.environ.get("HPA_NUM_WORKERS", "1"))
    grid = bifurcation.region_scan(
        alpha,
        c_range=tuple(args.c_range) if args.c_range else sc.c_range_pg_ml,
        eta_range=tuple(args.eta_range) if args.eta_range else sc.eta_range,
        grid_dims=tuple(args.grid) if args.grid else sc.grid,
        kind=args.scan_kind or sc.kind,
        n=args.n if args.n is not None else sc.n,
        workers=workers,
        physiology=phys,
    )
    if args.format == "json":
        _emit(args, cfg, "region_scan.json", grid.to_json() + "\n")
    else:
        _emit(args, cfg, "region_scan.csv", grid.to_csv())
    return EXIT_OK


def _write_run(args, cfg, tr, report):
    out_dir = args.output_dir or cfg.output_dir
    text = dumps(report.to_dict())
    if out_dir:
        write_atomic(Path(out_dir) / "trajectory.csv", tr.to_csv(stride=args.stride))
        write_atomic(Path(out_dir) / "oscillation.json", text)
    sys.stdout.write(text)


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    ks = _kernels_arg(args.kernels) if args.kernels else cfg.kernels
    if ks is None:
        raise ConfigError("kernels: required (--kernels or a kernels block)")
    p, e = _model(cfg)
    h = args.step or cfg.solver.h_min
    t_end = args.t_end or cfg.solver.t_end_min
    hist = HistoryFunction.perturbed(e, cfg.solver.history_perturbation)
    try:
        tr = integrate_kernels(p, ks, hist, t_end, h)
    except (GridError, UnsupportedKernelError, DomainError, NumericalError):
        raise
    except Exception as exc:
        raise NumericalError(f"integration failed: {exc}") from exc
    _write_run(args, cfg, tr, detect_oscillation(tr, e, cfg.solver.transient_fraction))
    return EXIT_OK


def cmd_simulate_frac(args) -> int:
    cfg = _resolve_config(args)
    p, e = _model(cfg)
    s = cfg.solver
    q = args.q if args.q is not None else s.q
    if q is None:
        raise ConfigError("solver.q: required")
    if args.tau is not None:
        taus = (0.0, args.tau[0], args.tau[0], args.tau[0]) if len(args.tau) == 1 else tuple(args.tau)
        if len(taus) != 4:
            raise ConfigError("--tau: give one value (tau2 = tau31 = tau32) or four values")
    else:
        taus = s.taus_min or (0.0, 0.0, 0.0, 0.0)
    fc = FracConfig(q, taus, args.step or s.h_min, args.t_end or s.t_end_min, s.corrector_iterations)
    hist = HistoryFunction.perturbed(e, s.history_perturbation)
    try:
        tr = integrate_fractional(p, fc, hist)
    except (GridError, DomainError, NumericalError):
        raise
    except Exception as exc:
        raise NumericalError(f"integration failed: {exc}") from exc
    _write_run(args, cfg, tr, detect_oscillation(tr, e, s.transient_fraction))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpaxis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON")
    common.add_argument("--scenario", help="name of a bundled scenario")
    common.add_argument("--output-dir")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--alpha", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--mu", type=float)
    common.add_argument("--c-pg-ml", type=float)
    common.add_argument("--c-ng-ml", type=float, help="half-saturation in ng/ml (converted to pg/ml)")
    common.add_argument(
        "--reference-physiology", action="store_true", help="use the built-in half-lives and mean levels"
    )

    sub.add_parser("fit", parents=[common], help="fit k1, k2, k3 and report the equilibrium")
    p = sub.add_parser("stability", parents=[common], help="delay-independent stability tests")
    p.add_argument("--q", type=float, help="also report the fractional-order test for this order")

    p = sub.add_parser("critical", parents=[common], help="Hopf critical values")
    p.add_argument("--kind", choices=("dirac", "gamma", "mixed"))
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--branches", type=int)

    p = sub.add_parser("region-scan", parents=[common], help="critical delays over the (c, eta=mu) plane")
    p.add_argument("--kind", dest="scan_kind", choices=("dirac", "gamma"))
    p.add_argument("--n", type=int)
    p.add_argument("--grid", type=int, nargs=2, metavar=("NC", "NETA"))
    p.add_argument("--c-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--eta-range", type=float, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("simulate", parents=[common], help="integrate the distributed-delay model")
    p.add_argument("--kernels", help="kernel-set JSON (file path or inline)")
    p.add_argument("--t-end", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--stride", type=int, default=1, help="write every STRIDE-th sample")

    p = sub.add_parser("simulate-frac", parents=[common], help="integrate the fractional-order model")
    p.add_argument("--q", type=float)
    p.add_argument("--tau", type=float, nargs="+")
    p.add_argument("--t-end", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--stride", type=int, default=1)
    return parser


COMMANDS = {
    "fit": cmd_fit,
    "stability": cmd_stability,
    "critical": cmd_critical,
    "region-scan": cmd_region_scan,
    "simulate": cmd_simulate,
    "simulate-frac": cmd_simulate_frac,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NoRootError as exc:
        print(f"no bifurcation: {exc}", file=sys.stderr)
        return EXIT_NO_BIFURCATION
    except (ConfigError, PreconditionError, GridError, UnsupportedKernelError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
