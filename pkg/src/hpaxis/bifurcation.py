"""Critical delays and Hopf crossings for Dirac, Gamma and mixed kernel sets.

With ``H = H2 H32 = H1 H2 H31`` the characteristic equation reads
``H(z)^(-1) = Q(z)``; a crossing ``z = i omega`` therefore needs ``|Q(i omega)| >= 1``,
which confines every crossing frequency to ``(0, omega0]``.
"""
from __future__ import annotations

import cmath
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, NoRootError, NumericalError, PreconditionError
from .kernels import KernelSet, ProductForm
from .model import Equilibrium, SystemParams, find_equilibrium, fit_params, PHYSIOLOGY
from .stability import (
    check_inequalities,
    q_func,
    q_log_deriv,
    q_modulus,
    q_real,
)

_EPS = np.finfo(float).eps
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class CrossingPoint:
    omega: float
    parameter: float
    branch: int
    kind: str
    transversality_sign: str
    transversality: float = float("nan")
    residual: float = float("nan")
    beta: float | None = None
    n: int | None = None

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def to_dict(self) -> dict:
        d = asdict(self)
        d["period"] = self.period
        return d


def _bisect(f, lo, hi, rtol=4 * _EPS):
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NumericalError(f"bracket [{lo}, {hi}] does not change sign")
    try:
        return optimize.bisect(f, lo, hi, xtol=1e-300, rtol=rtol, maxiter=400)
    except RuntimeError as exc:
        raise NumericalError(str(exc)) from exc


def _require_hopf_hypotheses(p: SystemParams, e: Equilibrium):
    rep = check_inequalities(p, e)
    if not rep.i1_holds:
        raise PreconditionError("inequality I1 fails: the delay-free equilibrium is not known to be stable")
    if rep.i2_sign != "I2bar":
        raise NoRootError(
            f"I2 holds (S = {rep.s_value:.6g} > 0): the equilibrium is stable for every kernel, no Hopf crossing"
        )
    return rep


def find_omega0(p: SystemParams, e: Equilibrium) -> float:
    """Unique positive root of ``|Q(i omega)| = 1``."""
    rep = check_inequalities(p, e)
    if rep.i2_sign == "I2":
        raise NoRootError(f"I2 holds (S = {rep.s_value:.6g}): |Q(i omega)| < 1 for all omega > 0")
    if rep.i2_sign == "boundary":
        return 0.0
    f = lambda w: float(q_modulus(w, p, e)) - 1.0
    hi = 1.0
    while f(hi) >= 0:
        hi *= 2.0
        if hi > 1e12:
            raise NumericalError("failed to bracket omega0")
    return _bisect(f, 0.0, hi)


def char_form(z: complex, p: SystemParams, e: Equilibrium, form: ProductForm) -> complex:
    """Characteristic function when both kernel products equal ``form``."""
    w1, w2, w3 = p.w
    return (z + w1) * (z + w2) * (z + w3) + (e.a * (z + w1) + e.b) * form.laplace(z)


def char_scale(z: complex, p: SystemParams, e: Equilibrium) -> float:
    w1, w2, w3 = p.w
    return abs((z + w1) * (z + w2) * (z + w3)) + abs(e.a * (z + w1) + e.b)


def track_root(fun, z0: complex, tol: float = 1e-14, maxiter: int = 50) -> complex:
    """Newton iteration on an analytic ``fun`` from ``z0`` (derivative by central differences)."""
    z = complex(z0)
    for _ in range(maxiter):
        h = 1e-7 * max(1.0, abs(z))
        d = (fun(z + h) - fun(z - h)) / (2 * h)
        step = fun(z) / d
        z -= step
        if abs(step) <= tol * max(1.0, abs(z)):
            return z
    raise NumericalError(f"root tracking from {z0} did not converge")


def numeric_crossing_direction(p, e, form_of, param: float, omega: float, delta: float = 1e-4) -> float:
    """Finite-difference ``d Re z / d param`` of the root that sits at ``i omega`` when the parameter is ``param``.

    ``form_of(value)`` builds the kernel product form for a parameter value.
    """
    h = delta * max(abs(param), 1.0)
    zp = track_root(lambda z: char_form(z, p, e, form_of(param + h)), 1j * omega)
    zm = track_root(lambda z: char_form(z, p, e, form_of(param - h)), 1j * omega)
    return (zp.real - zm.real) / (2 * h)


def _sign_label(x: float) -> str:
    return "positive" if x > 0 else "nonpositive"


def _angle(w: complex) -> float:
    """Argument of ``w`` in ``[0, 2 pi)``."""
    th = cmath.phase(w)
    return th + 2 * math.pi if th < 0 else th


def dirac_critical(p: SystemParams, e: Equilibrium, p_max: int = 3) -> list[CrossingPoint]:
    """Critical total delays ``tau_p = (theta0 + 2 p pi) / omega0``, ``p = 0 .. p_max-1``."""
    _require_hopf_hypotheses(p, e)
    w0 = find_omega0(p, e)
    z0 = 1j * w0
    q = q_func(z0, p, e)
    theta = _angle(q)
    L = q_log_deriv(z0, p, e)
    out = []
    for branch in range(p_max):
        tau = (theta + 2 * math.pi * branch) / w0
        rate = w0 * L.imag / abs(L - tau) ** 2
        res = abs(char_form(z0, p, e, ProductForm(tau, 0, None))) / char_scale(z0, p, e)
        out.append(CrossingPoint(w0, tau, branch, "dirac", _sign_label(rate), rate, res))
    return out


def chebyshev_T(n: int, x):
    """Chebyshev polynomial of the first kind by the three-term recurrence."""
    if int(n) != n or n < 0:
        raise DomainError(f"order must be a non-negative integer, got {n}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-12):
        raise DomainError("Chebyshev argument outside [-1, 1]")
    t_prev, t = np.ones_like(x), x
    if n == 0:
        return t_prev if t_prev.ndim else float(t_prev)
    for _ in range(int(n) - 1):
        t_prev, t = t, 2 * x * t - t_prev
    return t if t.ndim else float(t)


def _gamma_equation(p, e, n):
    def F(w):
        m = q_modulus(w, p, e)
        x = np.minimum(m ** (-1.0 / n), 1.0)
        return chebyshev_T(n, x) - q_real(w, p, e) / m

    return F


def _beta_of(w: float, p, e, n: int) -> float:
    m = float(q_modulus(w, p, e))
    return math.sqrt(max(m ** (2.0 / n) - 1.0, 0.0)) / w


@dataclass(frozen=True)
class GammaRoots:
    """All roots of the Chebyshev equation found on the scan grid, with their implied scales."""

    omegas: tuple
    betas: tuple
    residuals: tuple


def gamma_roots(p: SystemParams, e: Equilibrium, n: int, grid: int = 10_000, w0: float | None = None) -> GammaRoots:
    if w0 is None:
        w0 = find_omega0(p, e)
    F = _gamma_equation(p, e, n)
    w = w0 * np.arange(1, grid) / grid
    v = F(w)
    idx = np.nonzero(np.sign(v[:-1]) * np.sign(v[1:]) <= 0)[0]
    omegas, betas, res = [], [], []
    for i in idx:
        r = _bisect(lambda x: float(F(x)), w[i], w[i + 1])
        if omegas and abs(r - omegas[-1]) <= 1e-12 * w0:
            continue
        beta = _beta_of(r, p, e, n)
        z = 1j * r
        omegas.append(r)
        betas.append(beta)
        res.append(abs(char_form(z, p, e, ProductForm(0.0, n, beta))) / char_scale(z, p, e))
    return GammaRoots(tuple(omegas), tuple(betas), tuple(res))


def gamma_critical(p: SystemParams, e: Equilibrium, n: int, grid: int = 10_000, check: bool = True) -> CrossingPoint:
    """Critical Gamma scale ``beta_n`` for total shape ``n`` (largest Chebyshev root below ``omega0``).

    Roots of the Chebyshev equation only match the real part of ``(i beta w + 1)^n = Q(i w)``;
    candidates whose full complex residual does not vanish are skipped.
    """
    if int(n) != n or n < 1:
        raise PreconditionError(f"total shape must be a positive integer, got {n}")
    _require_hopf_hypotheses(p, e)
    roots = gamma_roots(p, e, n, grid)
    for w, beta, res in sorted(zip(roots.omegas, roots.betas, roots.residuals), reverse=True):
        if res < RESIDUAL_TOL:
            break
    else:
        raise NoRootError(f"no genuine root of the Gamma crossing equation for n={n} on a {grid}-point grid")

    L = q_log_deriv(1j * w, p, e)
    g = 1j * beta * w + 1
    rate = n * w * (g * L).imag / abs(g * L - n * beta) ** 2
    if check:
        num = numeric_crossing_direction(p, e, lambda b: ProductForm(0.0, n, b), beta, w)
        if not (num > 0 and rate > 0):
            raise NumericalError(f"transversality fails at beta={beta}: analytic {rate}, numeric {num}")
    return CrossingPoint(w, beta, 0, "gamma", _sign_label(rate), rate, res, beta=beta, n=int(n))


def _beta_limit(p, e, n) -> float:
    try:
        return gamma_critical(p, e, n, check=False).parameter
    except NoRootError:
        return math.inf


def mixed_critical(p: SystemParams, e: Equilibrium, n: int, beta: float, p_max: int = 3) -> list[CrossingPoint]:
    """Critical discrete delays when ``H(z) = exp(-tau z) / (beta z + 1)^n``."""
    _require_hopf_hypotheses(p, e)
    if not beta > 0:
        raise PreconditionError(f"beta must be positive, got {beta}")
    beta_n = _beta_limit(p, e, n)
    if beta >= beta_n:
        raise PreconditionError(
            f"beta={beta} >= beta_{n}={beta_n:.6g}: the equilibrium is already unstable without the discrete delay"
        )
    w0 = find_omega0(p, e)
    f = lambda w: float(q_modulus(w, p, e)) ** 2 - (beta**2 * w**2 + 1.0) ** n
    wt = _bisect(f, 0.0, w0)
    z = 1j * wt
    g = beta * z + 1
    theta = _angle(q_func(z, p, e) / g**n)
    L = q_log_deriv(z, p, e)
    out = []
    for branch in range(p_max):
        tau = (theta + 2 * math.pi * branch) / wt
        rate = wt * (L.imag + n * beta**2 * wt / (beta**2 * wt**2 + 1)) / abs(L - tau - n * beta / g) ** 2
        res = abs(char_form(z, p, e, ProductForm(tau, n, beta))) / char_scale(z, p, e)
        out.append(CrossingPoint(wt, tau, branch, "mixed", _sign_label(rate), rate, res, beta=beta, n=int(n)))
    return out


def critical_for_kernels(p: SystemParams, e: Equilibrium, ks: KernelSet, p_max: int = 1) -> list[CrossingPoint]:
    """Dispatch on the product form of an admissible kernel set."""
    if not ks.admissible:
        raise PreconditionError("kernel set violates H32 = H1 H31; critical values are only defined for that case")
    form = ks.total_form()
    if form.kind == "dirac":
        return dirac_critical(p, e, p_max)
    if form.kind == "gamma":
        return [gamma_critical(p, e, form.n)]
    return mixed_critical(p, e, form.n, form.beta, p_max)


# --- parameter-plane scans -------------------------------------------------

DEFAULT_BINS = (15.0, 30.0, 60.0, 90.0)


def bin_label(value: float, edges=DEFAULT_BINS) -> str:
    lo = 0.0
    for hi in edges:
        if value <= hi:
            return f"({lo:g},{hi:g}]"
        lo = hi
    return f"({lo:g},inf)"


@dataclass(frozen=True)
class RegionCell:
    c: float
    eta: float
    status: str
    critical_value: float
    bin: str


@dataclass
class RegionGrid:
    alpha: float
    kind: str
    n: int | None
    cells: list = field(default_factory=list)

    def bins(self) -> set:
        return {cell.bin for cell in self.cells if cell.bin}

    def count(self, status: str) -> int:
        return sum(cell.status == status for cell in self.cells)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["c", "eta", "status", "critical_value", "bin"])
        for cell in self.cells:
            cv = "" if math.isnan(cell.critical_value) else repr(cell.critical_value)
            w.writerow([repr(cell.c), repr(cell.eta), cell.status, cv, cell.bin])
        return buf.getvalue()

    def to_json(self) -> str:
        cells = [
            {**asdict(c), "critical_value": None if math.isnan(c.critical_value) else c.critical_value}
            for c in self.cells
        ]
        return json.dumps({"alpha": self.alpha, "kind": self.kind, "n": self.n, "cells": cells}, indent=1)


def scan_cell(alpha, c, eta, kind="dirac", n=4, edges=DEFAULT_BINS, physiology=None, grid=10_000) -> RegionCell:
    """Classify one ``(c, eta = mu)`` point; failures become a status, never an exception.

    Statuses: ``ok``, ``I2``, ``boundary``, ``no-crossing`` (gamma scans only) and ``error:<type>``.
    """
    phys = PHYSIOLOGY if physiology is None else physiology
    try:
        p = fit_params(**phys, alpha=alpha, eta=eta, mu=eta, c=c)
        e = find_equilibrium(p)
        rep = check_inequalities(p, e)
        if rep.i2_sign != "I2bar":
            return RegionCell(c, eta, rep.i2_sign, math.nan, "")
        if kind == "dirac":
            value = dirac_critical(p, e, 1)[0].parameter
        elif kind == "gamma":
            try:
                value = n * gamma_critical(p, e, n, grid=grid, check=False).parameter
            except NoRootError:
                # I2 fails but no Gamma(n) kernel reaches a crossing: stable for every beta
                return RegionCell(c, eta, "no-crossing", math.nan, "")
        else:
            raise DomainError(f"unknown scan kind {kind!r}")
        return RegionCell(c, eta, "ok", value, bin_label(value, edges))
    except Exception as exc:  # noqa: BLE001 - recorded per cell
        return RegionCell(c, eta, f"error:{type(exc).__name__}", math.nan, "")


def _scan_row(args):
    alpha, c_values, eta, kind, n, edges, phys, grid = args
    return [scan_cell(alpha, c, eta, kind, n, edges, phys, grid) for c in c_values]


def region_scan(
    alpha: float,
    c_range=(100.0, 10_000.0),
    eta_range=(0.01, 1.0),
    grid_dims=(100, 100),
    kind: str = "dirac",
    n: int = 4,
    delay_bins=DEFAULT_BINS,
    workers: int | None = None,
    physiology=None,
    grid: int = 10_000,
) -> RegionGrid:
    """Critical total mean delay over the ``(c, eta = mu)`` plane, binned by ``delay_bins``.

    Cells are ordered eta-major, c-minor; ``workers > 1`` partitions rows across processes
    without changing the output.
    """
    if kind not in ("dirac", "gamma"):
        raise DomainError(f"scan kind must be 'dirac' or 'gamma', got {kind!r}")
    nc, ne = grid_dims
    out = RegionGrid(alpha, kind, n if kind == "gamma" else None)
    if nc <= 0 or ne <= 0 or c_range[1] < c_range[0] or eta_range[1] < eta_range[0]:
        return out
    if c_range[0] == c_range[1] or eta_range[0] == eta_range[1]:
        return out
    c_values = np.linspace(*c_range, nc).tolist()
    eta_values = np.linspace(*eta_range, ne).tolist()
    jobs = [(alpha, c_values, eta, kind, n, tuple(delay_bins), physiology, grid) for eta in eta_values]
    if workers is None:
        workers = int(os.environ.get("HPA_NUM_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_row, jobs))
    else:
        rows = [_scan_row(j) for j in jobs]
    for row in rows:
        out.cells.extend(row)
    return out
