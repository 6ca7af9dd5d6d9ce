"""Delay-independent stability tests and the characteristic function.

The linearisation at the equilibrium has characteristic function

    (z+w1)(z+w2)(z+w3) + a (z+w1) H2 H32 + b H1 H2 H31

and, once ``H32 = H1 H31``, the crossings are governed by the rational function
``Q(z) = -(a w1 + b + a z) / ((z+w1)(z+w2)(z+w3))``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import KernelSet, combined_laplace
from .model import Equilibrium, SystemParams

I2_TOL = 1e-12


@dataclass(frozen=True)
class RouthCoefficients:
    c1: float
    c2: float
    c3: float
    c1c2_minus_c3: float
    stable: bool


@dataclass(frozen=True)
class StabilityReport:
    i1_holds: bool
    i1_value: float
    s_value: float
    i2_sign: str  # "I2", "boundary" or "I2bar"
    routh: RouthCoefficients

    def to_dict(self) -> dict:
        return asdict(self)


def routh_coefficients(p: SystemParams, e: Equilibrium) -> RouthCoefficients:
    """Coefficients of the delay-free cubic ``z^3 + c1 z^2 + c2 z + c3``."""
    w1, w2, w3 = p.w
    c1 = w1 + w2 + w3
    c2 = w1 * w2 + w2 * w3 + w1 * w3 + e.a
    c3 = w1 * w2 * w3 + e.a * w1 + e.b
    d = c1 * c2 - c3
    return RouthCoefficients(c1, c2, c3, d, bool(c1 > 0 and c3 > 0 and d > 0))


def i2_quantity(p: SystemParams, e: Equilibrium) -> float:
    """``1 + x f1'/f1 + x f2'/f2`` at the equilibrium; positive means stable for every kernel."""
    x = e.x3
    return 1.0 + x * p.f1.deriv(x) / p.f1(x) + x * p.f2.deriv(x) / p.f2(x)


def classify_i2(s: float, tol: float = I2_TOL) -> str:
    if abs(s) <= tol:
        return "boundary"
    return "I2" if s > 0 else "I2bar"


def check_inequalities(p: SystemParams, e: Equilibrium) -> StabilityReport:
    x = e.x3
    i1 = 8.0 * p.f1(x) + x * p.f1.deriv(x)
    s = i2_quantity(p, e)
    return StabilityReport(
        i1_holds=bool(i1 >= 0),
        i1_value=i1,
        s_value=s,
        i2_sign=classify_i2(s),
        routh=routh_coefficients(p, e),
    )


def phi_psi(z: complex, p: SystemParams, e: Equilibrium, ks: KernelSet) -> tuple[complex, complex]:
    """Split the characteristic equation as ``phi(z) = psi(z)``."""
    w1, w2, w3 = p.w
    h_fb, h_loop = combined_laplace(ks, z)
    phi = -(z + w1) * (z + w2) * (z + w3)
    psi = e.a * (z + w1) * h_fb + e.b * h_loop
    return phi, psi


def char_eval(z: complex, p: SystemParams, e: Equilibrium, ks: KernelSet) -> complex:
    phi, psi = phi_psi(z, p, e, ks)
    return psi - phi


@dataclass(frozen=True)
class QValue:
    value: complex
    modulus: float
    re: float


def q_func(z: complex, p: SystemParams, e: Equilibrium) -> complex:
    w1, w2, w3 = p.w
    return -(e.a * w1 + e.b + e.a * z) / ((z + w1) * (z + w2) * (z + w3))


def q_log_deriv(z: complex, p: SystemParams, e: Equilibrium) -> complex:
    """``Q'(z) / Q(z)`` from the factored rational form."""
    w1, w2, w3 = p.w
    return e.a / (e.a * z + e.a * w1 + e.b) - 1.0 / (z + w1) - 1.0 / (z + w2) - 1.0 / (z + w3)


def q_deriv(z: complex, p: SystemParams, e: Equilibrium) -> complex:
    return q_func(z, p, e) * q_log_deriv(z, p, e)


def q_modulus(omega, p: SystemParams, e: Equilibrium):
    """``|Q(i omega)|``; accepts scalars or numpy arrays."""
    w1, w2, w3 = p.w
    w2_ = np.square(omega)
    num = e.a**2 * w2_ + (e.a * w1 + e.b) ** 2
    den = (w2_ + w1**2) * (w2_ + w2**2) * (w2_ + w3**2)
    return np.sqrt(num / den)


def q_real(omega, p: SystemParams, e: Equilibrium):
    w1, w2, w3 = p.w
    a, b = e.a, e.b
    o2 = np.square(omega)
    num = a * o2**2 + (b * (w1 + w2 + w3) + a * (w1**2 - w2 * w3)) * o2 - w1 * w2 * w3 * (a * w1 + b)
    den = (o2 + w1**2) * (o2 + w2**2) * (o2 + w3**2)
    return num / den


def q_eval(omega: float, p: SystemParams, e: Equilibrium) -> QValue:
    if omega < 0:
        raise ValueError(f"omega must be non-negative, got {omega}")
    return QValue(q_func(1j * omega, p, e), float(q_modulus(omega, p, e)), float(q_real(omega, p, e)))


def jacobian(p: SystemParams, e: Equilibrium) -> np.ndarray:
    """Jacobian of the delay-free vector field at the equilibrium."""
    x = e.x3
    return np.array(
        [
            [-p.w1, 0.0, p.f1.deriv(x)],
            [p.f2(x), -p.w2, e.x1 * p.f2.deriv(x)],
            [0.0, p.k3, -p.w3],
        ]
    )


def cubic_roots(c1: float, c2: float, c3: float) -> np.ndarray:
    """Roots of ``z^3 + c1 z^2 + c2 z + c3`` (companion matrix, then one Newton polish)."""
    roots = np.roots([1.0, c1, c2, c3]).astype(complex)
    poly = lambda z: ((z + c1) * z + c2) * z + c3
    dpoly = lambda z: (3 * z + 2 * c1) * z + c2
    out = []
    for z in roots:
        d = dpoly(z)
        if d != 0:
            z = z - poly(z) / d
        out.append(z)
    return np.array(out)


def eigenvalues(p: SystemParams, e: Equilibrium) -> np.ndarray:
    r = routh_coefficients(p, e)
    return cubic_roots(r.c1, r.c2, r.c3)


def matignon_check(p: SystemParams, e: Equilibrium, q: float) -> bool:
    """Stability of the delay-free fractional linearisation: ``|arg lambda| > q pi / 2`` for all eigenvalues."""
    if not 0 < q <= 1:
        raise ValueError(f"fractional order must lie in (0, 1], got {q}")
    lam = eigenvalues(p, e)
    return bool(min(abs(cmath.phase(z)) for z in lam) > q * math.pi / 2)
