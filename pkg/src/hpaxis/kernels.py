"""Delay kernels: Dirac and integer-shape Gamma densities.

Every kernel used here has a Laplace transform of the form
``exp(-tau z) / (beta z + 1)^n``; :class:`ProductForm` carries that triple and
makes the kernel algebra of the characteristic equation exact.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

from scipy import stats

from .errors import DomainError, PoleError


@dataclass(frozen=True)
class Dirac:
    tau: float = 0.0

    def __post_init__(self):
        if not self.tau >= 0:
            raise DomainError(f"Dirac delay must be non-negative, got {self.tau}")

    @property
    def mean(self) -> float:
        return self.tau

    def laplace(self, z: complex) -> complex:
        return cmath.exp(-self.tau * z)

    def form(self) -> "ProductForm":
        return ProductForm(self.tau, 0, None)

    def to_dict(self) -> dict:
        return {"type": "dirac", "tau": self.tau}


@dataclass(frozen=True)
class Gamma:
    """Gamma density ``s^(n-1) exp(-s/beta) / (beta^n (n-1)!)`` with integer shape."""

    n: int
    beta: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"Gamma shape must be an integer >= 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.beta > 0:
            raise DomainError(f"Gamma scale must be positive, got {self.beta}")

    @property
    def mean(self) -> float:
        return self.n * self.beta

    def laplace(self, z: complex) -> complex:
        z = complex(z)
        if z.real <= -1.0 / self.beta:
            raise PoleError(f"Re z = {z.real} is outside the half-plane Re z > -1/beta = {-1.0 / self.beta}")
        return (self.beta * z + 1.0) ** (-self.n)

    def pdf(self, s):
        return stats.gamma.pdf(s, a=self.n, scale=self.beta)

    def form(self) -> "ProductForm":
        return ProductForm(0.0, self.n, self.beta)

    def to_dict(self) -> dict:
        return {"type": "gamma", "n": self.n, "beta": self.beta}


DelayKernel = Union[Dirac, Gamma]


@dataclass(frozen=True)
class ProductForm:
    """Transform ``exp(-tau z) (beta z + 1)^(-n)``; ``beta`` is None when ``n == 0``."""

    tau: float
    n: int
    beta: float | None

    def __mul__(self, other: "ProductForm") -> "ProductForm":
        if self.n and other.n and not math.isclose(self.beta, other.beta, rel_tol=1e-12):
            raise DomainError(f"Gamma scales differ ({self.beta} vs {other.beta}); product is not of Gamma form")
        beta = self.beta if self.n else other.beta
        return ProductForm(self.tau + other.tau, self.n + other.n, beta)

    def matches(self, other: "ProductForm", tol: float = 1e-9) -> bool:
        if self.n != other.n or abs(self.tau - other.tau) > tol * max(1.0, self.tau):
            return False
        return self.n == 0 or math.isclose(self.beta, other.beta, rel_tol=tol)

    @property
    def kind(self) -> str:
        if self.n == 0:
            return "dirac"
        return "gamma" if self.tau == 0 else "mixed"

    def laplace(self, z: complex) -> complex:
        out = cmath.exp(-self.tau * z)
        if self.n:
            out *= Gamma(self.n, self.beta).laplace(z)
        return out


def kernel_from_dict(d: dict) -> DelayKernel:
    kind = d.get("type")
    if kind == "dirac":
        if set(d) != {"type", "tau"}:
            raise DomainError(f"dirac kernel takes keys type, tau; got {sorted(d)}")
        return Dirac(float(d["tau"]))
    if kind == "gamma":
        if set(d) != {"type", "n", "beta"}:
            raise DomainError(f"gamma kernel takes keys type, n, beta; got {sorted(d)}")
        n = d["n"]
        if isinstance(n, float) and not n.is_integer():
            raise DomainError(f"Gamma shape must be an integer, got {n}")
        return Gamma(int(n), float(d["beta"]))
    raise DomainError(f"unknown kernel type {kind!r}")


def kernel_mean(k: DelayKernel) -> float:
    return k.mean


def kernel_laplace(k: DelayKernel, z: complex) -> complex:
    return k.laplace(z)


def convolution_mean(k1: DelayKernel, k2: DelayKernel) -> float:
    # the mean of a sum of independent delays is additive
    return k1.mean + k2.mean


@dataclass(frozen=True)
class KernelSet:
    """Kernels for the four pathways: h1 (CRH->ACTH), h2 (ACTH->CORT), h31, h32 (CORT feedbacks)."""

    h1: DelayKernel
    h2: DelayKernel
    h31: DelayKernel
    h32: DelayKernel

    @property
    def admissible(self) -> bool:
        """True when ``H32 = H1 H31``, so both products in the characteristic equation coincide."""
        try:
            return self.h32.form().matches(self.h1.form() * self.h31.form())
        except DomainError:
            return False

    def total_form(self) -> ProductForm:
        """Product form of ``H2 H32``."""
        return self.h2.form() * self.h32.form()

    def to_dict(self) -> dict:
        return {name: getattr(self, name).to_dict() for name in ("h1", "h2", "h31", "h32")}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSet":
        names = {"h1", "h2", "h31", "h32"}
        if set(d) != names:
            raise DomainError(f"kernel set keys must be exactly {sorted(names)}, got {sorted(d)}")
        return cls(**{name: kernel_from_dict(d[name]) for name in names})

    @classmethod
    def dirac(cls, tau1=0.0, tau2=0.0, tau31=0.0, tau32=0.0) -> "KernelSet":
        return cls(Dirac(tau1), Dirac(tau2), Dirac(tau31), Dirac(tau32))

    @classmethod
    def strong_gamma(cls, beta: float) -> "KernelSet":
        """No CRH delay and shape-2 Gamma kernels elsewhere (total shape 4)."""
        return cls(Dirac(0.0), Gamma(2, beta), Gamma(2, beta), Gamma(2, beta))

    @classmethod
    def mixed(cls, tau2: float, n: int, beta: float) -> "KernelSet":
        """Discrete ACTH->CORT delay with identical Gamma feedback kernels."""
        return cls(Dirac(0.0), Dirac(tau2), Gamma(n, beta), Gamma(n, beta))


def combined_laplace(ks: KernelSet, z: complex) -> tuple[complex, complex]:
    """``(H2 H32, H1 H2 H31)`` evaluated at ``z``."""
    h2 = ks.h2.laplace(z)
    return h2 * ks.h32.laplace(z), ks.h1.laplace(z) * h2 * ks.h31.laplace(z)
