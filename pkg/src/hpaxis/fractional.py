"""Caputo fractional-order model with discrete delays, integrated by a
predictor-corrector (fractional Adams-Bashforth-Moulton) scheme.

For ``D^q x = f(t, x)`` with ``x(0) = x0`` the step to ``t_{k+1}`` is

    predictor  x^P = x0 + sum_j b_{j,k+1} f_j
    corrector  x   = x0 + sum_j a_{j,k+1} f_j + a_{k+1,k+1} f(t_{k+1}, x^P)

with product-rectangle weights ``b`` and product-trapezoid weights ``a``.
Delayed arguments ``x(t - tau)`` with ``tau >= h`` are grid values already
computed (or history for ``t - tau < 0``), so delays add no implicitness. The
memory integral starts at ``t = 0``; pre-zero history only enters delay terms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError
from .model import SystemParams
from .simulate import HistoryFunction, Trajectory, _check_finite, grid_lag


@dataclass(frozen=True)
class FracConfig:
    q: float
    taus: tuple = (0.0, 0.0, 0.0, 0.0)  # tau1, tau2, tau31, tau32 (min)
    h: float = 0.1
    t_end: float = 2000.0
    corrector_iterations: int = 1

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise DomainError(f"fractional order must lie in (0, 1], got {self.q}")
        if len(self.taus) != 4 or any(not t >= 0 for t in self.taus):
            raise DomainError(f"need four non-negative delays, got {self.taus}")
        if not self.h > 0 or not self.t_end > 0:
            raise DomainError("h and t_end must be positive")
        if self.corrector_iterations < 1:
            raise DomainError("at least one corrector iteration is required")
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))

    @property
    def lags(self) -> tuple:
        names = ("tau1", "tau2", "tau31", "tau32")
        return tuple(grid_lag(t, self.h, n) for t, n in zip(self.taus, names))


@dataclass(frozen=True)
class ABMWeights:
    """Weights for the step to ``t_N``; index ``j`` multiplies ``f(t_j)``.

    ``b`` has length N (j = 0..N-1), ``a`` has length N+1 (j = 0..N).
    """

    a: np.ndarray
    b: np.ndarray


def _b_kernel(q, N):
    m = np.arange(N, dtype=float)
    return (m + 1) ** q - m**q


def _a_kernel(q, N):
    m = np.arange(N, dtype=float)
    return (m + 2) ** (q + 1) + m ** (q + 1) - 2 * (m + 1) ** (q + 1)


def _a_start(q, k):
    """Weight of ``f_0`` in the corrector for the step to ``t_{k+1}`` (before scaling)."""
    return k ** (q + 1) - (k - q) * (k + 1) ** q


def abm_weights(q: float, N: int, h: float = 1.0) -> ABMWeights:
    if not 0 < q <= 1:
        raise DomainError(f"fractional order must lie in (0, 1], got {q}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    cb = h**q / gamma_fn(q + 1)
    ca = h**q / gamma_fn(q + 2)
    k = N - 1
    b = cb * _b_kernel(q, N)[::-1]
    a = np.empty(N + 1)
    a[0] = _a_start(q, k)
    a[1:N] = _a_kernel(q, k)[::-1] if k > 0 else []
    a[N] = 1.0
    return ABMWeights(ca * a, b)


def fractional_pece(rhs, x0, q: float, h: float, n_steps: int, corrector_iterations: int = 1):
    """Generic fractional predictor-corrector.

    ``rhs(k, x, X)`` returns ``f`` at ``t_k`` for state ``x``; ``X`` holds the states
    computed so far (rows ``0..k-1`` valid) so delayed reads are possible.
    Returns the state array of shape ``(n_steps + 1, dim)``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    dim = x0.shape[0]
    X = np.empty((n_steps + 1, dim))
    F = np.empty((n_steps + 1, dim))
    X[0] = x0
    cb = h**q / gamma_fn(q + 1)
    ca = h**q / gamma_fn(q + 2)
    B = cb * _b_kernel(q, n_steps)
    A = ca * _a_kernel(q, n_steps)
    for k in range(n_steps):
        F[k] = rhs(k, X[k], X)
        # reversed views: weight of f_j is B[k-j]
        pred = x0 + B[k::-1] @ F[: k + 1]
        hist_sum = x0 + ca * _a_start(q, k) * F[0]
        if k > 0:
            hist_sum = hist_sum + A[k - 1 :: -1] @ F[1 : k + 1]
        x = pred
        for _ in range(corrector_iterations):
            x = hist_sum + ca * rhs(k + 1, x, X)
        X[k + 1] = x
    return X


def integrate_fractional(p: SystemParams, cfg: FracConfig, hist: HistoryFunction) -> Trajectory:
    lag1, lag2, lag31, lag32 = cfg.lags
    m = max(cfg.lags)
    n_steps = int(round(cfg.t_end / cfg.h))
    H = hist(-cfg.h * np.arange(m, 0, -1)) if m else np.zeros((0, 3))
    f1, f2 = p.f1, p.f2
    w1, w2, w3, k3 = p.w1, p.w2, p.w3, p.k3

    def read(X, k, lag, x, comp):
        if lag == 0:
            return x[comp]
        i = k - lag
        return X[i, comp] if i >= 0 else H[i + m, comp]

    def rhs(k, x, X):
        u31 = max(read(X, k, lag31, x, 2), 0.0)
        u32 = max(read(X, k, lag32, x, 2), 0.0)
        return np.array(
            [
                f1(u31) - w1 * x[0],
                f2(u32) * read(X, k, lag1, x, 0) - w2 * x[1],
                k3 * read(X, k, lag2, x, 1) - w3 * x[2],
            ]
        )

    X = fractional_pece(rhs, hist(0.0), cfg.q, cfg.h, n_steps, cfg.corrector_iterations)
    t = cfg.h * np.arange(n_steps + 1)
    _check_finite(t, X)
    return Trajectory(t, X, cfg.h)


def mittag_leffler(alpha: float, z: float, terms: int = 100) -> float:
    """Truncated power series of ``E_alpha(z) = sum z^k / Gamma(alpha k + 1)``."""
    k = np.arange(terms)
    return float(np.sum(z**k / gamma_fn(alpha * k + 1)))


__all__ = [
    "ABMWeights",
    "FracConfig",
    "abm_weights",
    "fractional_pece",
    "integrate_fractional",
    "mittag_leffler",
]
