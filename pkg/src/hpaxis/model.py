"""Feedback functions, parameter fitting and the equilibrium of the HPA model.

Units throughout: concentrations in pg/ml, time in minutes.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, NumericalError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class HillFeedback:
    """Negative feedback ``f(u) = k (1 - eta u^alpha / (c^alpha + u^alpha))``."""

    k: float
    eta: float
    c: float
    alpha: float

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"k must be positive, got {self.k}")
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")
        if not self.alpha >= 1:
            raise DomainError(f"alpha must be >= 1, got {self.alpha}")

    def saturation(self, u: float) -> float:
        # u^a / (c^a + u^a), written in the ratio form to avoid overflow for large alpha
        if u == 0:
            return 0.0
        r = (self.c / u) ** self.alpha
        return 1.0 / (1.0 + r)

    def __call__(self, u: float) -> float:
        if u < 0:
            raise DomainError(f"concentration must be non-negative, got {u}")
        return self.k * (1.0 - self.eta * self.saturation(u))

    def deriv(self, u: float) -> float:
        if u < 0:
            raise DomainError(f"concentration must be non-negative, got {u}")
        if u == 0:
            return -self.k * self.eta / self.c if self.alpha == 1 else 0.0
        s = self.saturation(u)
        # d/du [u^a/(c^a+u^a)] = (a/u) s (1 - s)
        return -self.k * self.eta * self.alpha * s * (1.0 - s) / u

    def elasticity(self, u: float) -> float:
        """Dimensionless log-derivative ``u f'(u) / f(u)``."""
        if u == 0:
            return 0.0
        s = self.saturation(u)
        return -self.eta * self.alpha * s * (1.0 - s) / (1.0 - self.eta * s)


def feedback_eval(f: HillFeedback, u: float) -> float:
    return f(u)


def feedback_deriv(f: HillFeedback, u: float) -> float:
    return f.deriv(u)


@dataclass(frozen=True)
class SystemParams:
    w1: float
    w2: float
    w3: float
    k3: float
    f1: HillFeedback
    f2: HillFeedback

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "k3"):
            v = getattr(self, name)
            if not v > 0:
                raise DomainError(f"{name} must be positive, got {v}")

    @property
    def w(self) -> tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        expected = {"w1", "w2", "w3", "k3", "f1", "f2"}
        if set(d) != expected:
            raise DomainError(f"parameter keys must be exactly {sorted(expected)}, got {sorted(d)}")
        return cls(
            w1=float(d["w1"]),
            w2=float(d["w2"]),
            w3=float(d["w3"]),
            k3=float(d["k3"]),
            f1=_feedback_from_dict(d["f1"]),
            f2=_feedback_from_dict(d["f2"]),
        )


def _feedback_from_dict(d: dict) -> HillFeedback:
    expected = {"k", "eta", "c", "alpha"}
    if set(d) != expected:
        raise DomainError(f"feedback keys must be exactly {sorted(expected)}, got {sorted(d)}")
    return HillFeedback(**{k: float(v) for k, v in d.items()})


@dataclass(frozen=True)
class Equilibrium:
    """Steady state ``(x1, x2, x3)`` with the linearisation gains ``a`` and ``b``."""

    x1: float
    x2: float
    x3: float
    a: float
    b: float

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def state(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.x3)


def fit_params(T1, T2, T3, xbar1, xbar2, xbar3, alpha, eta, mu, c) -> SystemParams:
    """Choose ``w_i``, ``k1``, ``k2``, ``k3`` so that the equilibrium sits at the mean hormone levels.

    Half-lives ``T_i`` give ``w_i = ln 2 / T_i``; the remaining constants follow
    from requiring ``(xbar1, xbar2, xbar3)`` to solve the steady-state equations.
    """
    for name, v in dict(T1=T1, T2=T2, T3=T3, xbar1=xbar1, xbar2=xbar2, xbar3=xbar3, c=c).items():
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    if not 1 <= alpha <= 8:
        raise DomainError(f"alpha must lie in [1, 8], got {alpha}")
    w1, w2, w3 = LN2 / T1, LN2 / T2, LN2 / T3
    k3 = w3 * xbar3 / xbar2
    f1_star = w1 * xbar1
    f2_star = (w1 * w2 * w3 / k3) * xbar3 / f1_star
    # unit-amplitude feedbacks give the Hill factor at xbar3 without duplicating the formula
    s1 = 1.0 - HillFeedback(1.0, eta, c, alpha)(xbar3)
    s2 = 1.0 - HillFeedback(1.0, mu, c, alpha)(xbar3)
    f1 = HillFeedback(f1_star / (1.0 - s1), eta, c, alpha)
    f2 = HillFeedback(f2_star / (1.0 - s2), mu, c, alpha)
    return SystemParams(w1, w2, w3, k3, f1, f2)


def find_equilibrium(p: SystemParams, rtol: float = 1e-10, maxiter: int = 500) -> Equilibrium:
    """Unique equilibrium of the model, located by bisection on ``x - g(x)``.

    ``g(x) = k3 f1(x) f2(x) / (w1 w2 w3)`` is positive and decreasing, so
    ``x - g(x)`` changes sign exactly once on ``[0, g(0)]``.
    """
    scale = p.k3 / (p.w1 * p.w2 * p.w3)

    def g(x):
        return scale * p.f1(x) * p.f2(x)

    g0 = g(0.0)
    F = lambda x: x - g(x)
    if F(g0) == 0.0:
        x3 = g0
    else:
        try:
            x3 = optimize.bisect(F, 0.0, g0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=maxiter)
        except RuntimeError as exc:
            raise NumericalError(f"equilibrium bisection did not converge: {exc}") from exc
    if abs(F(x3)) > rtol * g0:
        raise NumericalError(f"equilibrium residual {abs(F(x3))} exceeds {rtol} * g(0)")

    x1 = p.f1(x3) / p.w1
    x2 = p.w3 * x3 / p.k3
    a = -(p.k3 / p.w1) * p.f1(x3) * p.f2.deriv(x3)
    b = -p.k3 * p.f1.deriv(x3) * p.f2(x3)
    if a < 0 or b < 0:
        raise NumericalError(f"negative linearisation gains a={a}, b={b}")
    return Equilibrium(x1, x2, x3, a, b)


# Reference physiology: plasma half-lives (min) and 24-h mean levels (pg/ml).
PHYSIOLOGY = dict(T1=4.0, T2=19.9, T3=76.4, xbar1=7.659, xbar2=21.0, xbar3=3055.0)


def reference_params(alpha: float, eta: float, c: float = 2000.0, mu: float | None = None) -> SystemParams:
    """Fitted parameters for the reference physiology with ``eta = mu`` by default."""
    return fit_params(**PHYSIOLOGY, alpha=alpha, eta=eta, mu=eta if mu is None else mu, c=c)
