"""Time-domain integration of the distributed-delay model and oscillation detection.

Discrete delays are read from the stored solution (delays must be multiples of
the step so grid reads are exact; half-step reads use cubic Hermite
interpolation with the stored derivatives). Gamma kernels are replaced by a
linear chain of ``n`` first-order stages with time constant ``beta``, which
has transfer function ``(beta z + 1)^(-n)``.
"""
from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit
from scipy import integrate

from .errors import DomainError, GridError, NumericalError, UnsupportedKernelError
from .kernels import Dirac, Gamma, KernelSet
from .model import Equilibrium, SystemParams

# pathway order: h1 (acts on x1), h2 (x2), h31 (x3), h32 (x3)
PATH_SOURCE = np.array([0, 1, 2, 2], dtype=np.int64)
PATH_NAMES = ("h1", "h2", "h31", "h32")


@dataclass(frozen=True)
class HistoryFunction:
    """Initial history on ``(-inf, 0]``: constant, or sampled with linear interpolation and constant extrapolation."""

    values: np.ndarray  # shape (3,) when constant, (m, 3) when sampled
    times: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if self.times is None:
            if v.shape != (3,):
                raise DomainError(f"constant history needs 3 values, got shape {v.shape}")
        else:
            t = np.asarray(self.times, dtype=float)
            object.__setattr__(self, "times", t)
            if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] != t.shape[0]:
                raise DomainError("sampled history needs values of shape (len(times), 3)")
            if np.any(t > 0) or np.any(np.diff(t) <= 0):
                raise DomainError("history sample times must be increasing and <= 0")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("history values must be finite and non-negative")

    @classmethod
    def constant(cls, x) -> "HistoryFunction":
        return cls(np.asarray(x, dtype=float))

    @classmethod
    def perturbed(cls, e: Equilibrium, rel: float = 0.01, component: int = 2) -> "HistoryFunction":
        """Constant history at the equilibrium with one component scaled by ``1 + rel``."""
        x = np.array(e.state, dtype=float)
        x[component] *= 1.0 + rel
        return cls(x)

    @property
    def is_constant(self) -> bool:
        return self.times is None

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.is_constant:
            return np.broadcast_to(self.values, t.shape + (3,)).copy()
        cols = [np.interp(t, self.times, self.values[:, i]) for i in range(3)]
        return np.stack(cols, axis=-1)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # (N+1, 3)
    h: float
    aux: np.ndarray | None = None

    @property
    def x1(self):
        return self.x[:, 0]

    @property
    def x2(self):
        return self.x[:, 1]

    @property
    def x3(self):
        return self.x[:, 2]

    def to_csv(self, stride: int = 1) -> str:
        buf = io.StringIO()
        buf.write("t,x1,x2,x3\n")
        data = np.column_stack([self.t, self.x])[::stride].tolist()
        for row in data:
            buf.write(",".join(repr(v) for v in row) + "\n")
        return buf.getvalue()


# --- compiled core -----------------------------------------------------------


@njit(cache=True)
def _hill(u, k, eta, c, alpha):
    if u <= 0.0:
        return k
    s = 1.0 / (1.0 + (c / u) ** alpha)
    return k * (1.0 - eta * s)


@njit(cache=True)
def _delayed(src, idx, X, D, hist, m2, h):
    # idx counts half steps from t=0; hist holds half-step samples on [-M h, 0)
    if idx < 0:
        return hist[idx + m2, src]
    if idx % 2 == 0:
        return X[idx // 2, src]
    j = (idx - 1) // 2
    return 0.5 * (X[j, src] + X[j + 1, src]) + 0.125 * h * (D[j, src] - D[j + 1, src])


@njit(cache=True)
def _rhs(s, idx, X, D, hist, m2, h, par, src, lag, nch, off, beta, out):
    v = np.empty(4)
    for k in range(4):
        if nch[k] > 0:
            v[k] = s[off[k] + nch[k] - 1]
        elif lag[k] == 0:
            v[k] = s[src[k]]
        else:
            v[k] = _delayed(src[k], idx - 2 * lag[k], X, D, hist, m2, h)
    w1, w2, w3, k3 = par[0], par[1], par[2], par[3]
    out[0] = _hill(v[2], par[4], par[5], par[6], par[7]) - w1 * s[0]
    out[1] = _hill(v[3], par[8], par[9], par[10], par[11]) * v[0] - w2 * s[1]
    out[2] = k3 * v[1] - w3 * s[2]
    for k in range(4):
        if nch[k] > 0:
            o = off[k]
            out[o] = (s[src[k]] - s[o]) / beta[k]
            for j in range(1, nch[k]):
                out[o + j] = (s[o + j - 1] - s[o + j]) / beta[k]


@njit(cache=True)
def _rk4(s0, n_steps, h, par, src, lag, nch, off, beta, hist):
    dim = s0.shape[0]
    m2 = hist.shape[0]
    S = np.empty((n_steps + 1, dim))
    D = np.empty((n_steps + 1, 3))
    S[0] = s0
    X = S[:, :3]
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    for n in range(n_steps):
        s = S[n]
        _rhs(s, 2 * n, X, D, hist, m2, h, par, src, lag, nch, off, beta, k1)
        D[n, 0] = k1[0]
        D[n, 1] = k1[1]
        D[n, 2] = k1[2]
        for i in range(dim):
            tmp[i] = s[i] + 0.5 * h * k1[i]
        _rhs(tmp, 2 * n + 1, X, D, hist, m2, h, par, src, lag, nch, off, beta, k2)
        for i in range(dim):
            tmp[i] = s[i] + 0.5 * h * k2[i]
        _rhs(tmp, 2 * n + 1, X, D, hist, m2, h, par, src, lag, nch, off, beta, k3)
        for i in range(dim):
            tmp[i] = s[i] + h * k3[i]
        _rhs(tmp, 2 * n + 2, X, D, hist, m2, h, par, src, lag, nch, off, beta, k4)
        for i in range(dim):
            S[n + 1, i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return S


# --- python front end --------------------------------------------------------


def pack_params(p: SystemParams) -> np.ndarray:
    f1, f2 = p.f1, p.f2
    return np.array([p.w1, p.w2, p.w3, p.k3, f1.k, f1.eta, f1.c, f1.alpha, f2.k, f2.eta, f2.c, f2.alpha])


def grid_lag(tau: float, h: float, name: str = "tau") -> int:
    """Number of steps in ``tau``; raises :class:`GridError` unless ``tau`` is a multiple of ``h``."""
    lag = round(tau / h)
    if abs(lag * h - tau) > 1e-9 * max(1.0, tau):
        suggestion = tau / math.ceil(tau / h)
        raise GridError(f"{name}={tau} is not a multiple of h={h}; nearest admissible step for it is h={suggestion:.6g}")
    return int(lag)


@dataclass(frozen=True)
class _Layout:
    lag: np.ndarray
    nch: np.ndarray
    off: np.ndarray
    beta: np.ndarray
    dim: int


def _layout(ks: KernelSet, h: float) -> _Layout:
    lag = np.zeros(4, dtype=np.int64)
    nch = np.zeros(4, dtype=np.int64)
    off = np.zeros(4, dtype=np.int64)
    beta = np.ones(4)
    dim = 3
    for k, name in enumerate(PATH_NAMES):
        ker = getattr(ks, name)
        if isinstance(ker, Dirac):
            lag[k] = grid_lag(ker.tau, h, f"{name}.tau")
        elif isinstance(ker, Gamma):
            nch[k], beta[k], off[k] = ker.n, ker.beta, dim
            dim += ker.n
        else:
            raise UnsupportedKernelError(f"{name}: unsupported kernel {ker!r}")
    return _Layout(lag, nch, off, beta, dim)


def _chain_initial(hist: HistoryFunction, src: int, n: int, beta: float) -> np.ndarray:
    """Chain states at t=0: stage ``j`` equals the history filtered by a Gamma(j, beta) density."""
    if hist.is_constant:
        return np.full(n, hist.values[src])
    out = np.empty(n)
    for j in range(1, n + 1):
        dens = Gamma(j, beta).pdf
        val, _ = integrate.quad(lambda s: hist(-s)[src] * dens(s), 0, np.inf, limit=200)
        out[j - 1] = val
    return out


def _check_finite(t, S):
    bad = ~np.all(np.isfinite(S), axis=1)
    if bad.any():
        raise NumericalError(f"state became non-finite at t={t[np.argmax(bad)]:g}; reduce the step")


def integrate_kernels(p: SystemParams, ks: KernelSet, hist: HistoryFunction, t_end: float, h: float = 0.01) -> Trajectory:
    """Fixed-step RK4 for any combination of grid-aligned Dirac and integer Gamma kernels."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    lay = _layout(ks, h)
    n_steps = int(round(t_end / h))
    m = int(lay.lag.max())
    if m > 0:
        tt = -m * h + 0.5 * h * np.arange(2 * m)
        hist_half = hist(tt)
    else:
        hist_half = np.zeros((1, 3))
    s0 = np.empty(lay.dim)
    s0[:3] = hist(0.0)
    for k in range(4):
        if lay.nch[k]:
            o = lay.off[k]
            s0[o : o + lay.nch[k]] = _chain_initial(hist, PATH_SOURCE[k], lay.nch[k], lay.beta[k])
    S = _rk4(s0, n_steps, h, pack_params(p), PATH_SOURCE, lay.lag, lay.nch, lay.off, lay.beta, hist_half)
    t = h * np.arange(n_steps + 1)
    _check_finite(t, S)
    aux = S[:, 3:] if lay.dim > 3 else None
    return Trajectory(t, S[:, :3].copy(), h, aux)


def _dirac_set(taus) -> KernelSet:
    if isinstance(taus, dict):
        return KernelSet.dirac(taus.get("tau1", 0.0), taus.get("tau2", 0.0), taus.get("tau31", 0.0), taus.get("tau32", 0.0))
    return KernelSet.dirac(*taus)


def integrate_dirac(p: SystemParams, taus, hist: HistoryFunction, t_end: float, h: float = 0.01) -> Trajectory:
    """Discrete delays ``(tau1, tau2, tau31, tau32)`` (tuple or dict)."""
    return integrate_kernels(p, _dirac_set(taus), hist, t_end, h)


def integrate_gamma_chain(p: SystemParams, ks: KernelSet, hist: HistoryFunction, t_end: float, h: float = 0.01) -> Trajectory:
    for name in PATH_NAMES:
        ker = getattr(ks, name)
        if not (isinstance(ker, Gamma) or (isinstance(ker, Dirac) and ker.tau == 0)):
            raise UnsupportedKernelError(f"{name}: chain integration needs Gamma or zero-delay kernels, got {ker!r}")
    return integrate_kernels(p, ks, hist, t_end, h)


def integrate_mixed(p: SystemParams, tau2: float, n: int, beta: float, hist: HistoryFunction, t_end: float, h: float = 0.01) -> Trajectory:
    return integrate_kernels(p, KernelSet.mixed(tau2, n, beta), hist, t_end, h)


def chain_jacobian(p: SystemParams, e: Equilibrium, ks: KernelSet) -> np.ndarray:
    """Jacobian at the equilibrium of the chain-expanded ODE (kernels must be Gamma or zero-delay Dirac)."""
    lay = _layout(ks, 1.0)
    if np.any(lay.lag):
        raise UnsupportedKernelError("discrete delays have no finite-dimensional Jacobian")
    J = np.zeros((lay.dim, lay.dim))
    x = e.x3

    def col(k):
        return lay.off[k] + lay.nch[k] - 1 if lay.nch[k] else PATH_SOURCE[k]

    J[0, 0] = -p.w1
    J[0, col(2)] += p.f1.deriv(x)
    J[1, 1] = -p.w2
    J[1, col(3)] += e.x1 * p.f2.deriv(x)
    J[1, col(0)] += p.f2(x)
    J[2, 2] = -p.w3
    J[2, col(1)] += p.k3
    for k in range(4):
        o, n, b = lay.off[k], lay.nch[k], lay.beta[k]
        for j in range(n):
            J[o + j, o + j] = -1.0 / b
            J[o + j, PATH_SOURCE[k] if j == 0 else o + j - 1] += 1.0 / b
    return J


# --- oscillation detection ---------------------------------------------------


@dataclass(frozen=True)
class OscillationReport:
    verdict: str  # "converged", "oscillating" or "undecided"
    amplitude: tuple
    period: float
    period_cv: float
    equilibrium_distance: float
    sustain_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def _upcrossing_times(t, y, level):
    i = np.nonzero((y[:-1] < level) & (y[1:] >= level))[0]
    frac = (level - y[i]) / (y[i + 1] - y[i])
    return t[i] + frac * (t[i + 1] - t[i])


def detect_oscillation(
    tr: Trajectory,
    e: Equilibrium,
    transient_fraction: float = 0.5,
    amp_tol: float = 1e-3,
    conv_tol: float = 1e-4,
    cv_tol: float = 0.05,
    final_fraction: float = 0.1,
    sustain_tol: float = 0.9,
) -> OscillationReport:
    """Classify the late-time behaviour of a trajectory.

    ``converged``: the last ``final_fraction`` of the analysed window stays within
    ``conv_tol`` (relative) of the equilibrium. ``oscillating``: peak-to-trough
    amplitude of x3 above ``amp_tol`` relative, regular upward mean-crossings of x3
    (coefficient of variation below ``cv_tol``) and an envelope that is not
    decaying (second-half amplitude at least ``sustain_tol`` of the first half).
    """
    if not 0 <= transient_fraction < 1:
        raise DomainError("transient_fraction must lie in [0, 1)")
    start = int(len(tr.t) * transient_fraction)
    t, x = tr.t[start:], tr.x[start:]
    eq = np.array(e.state)
    amp = tuple(float(v) for v in x.max(axis=0) - x.min(axis=0)) if len(t) else (0.0, 0.0, 0.0)
    nf = max(1, int(len(t) * final_fraction))
    dist = float(np.max(np.abs(x[-nf:] - eq) / eq)) if len(t) else math.inf

    period, cv, sustain = math.nan, math.nan, math.nan
    if len(t) >= 4:
        y = x[:, 2]
        crossings = _upcrossing_times(t, y, y.mean())
        if len(crossings) >= 4:
            gaps = np.diff(crossings)
            period = float(gaps.mean())
            cv = float(gaps.std() / period)
        half = len(t) // 2
        a1 = y[:half].max() - y[:half].min()
        a2 = y[half:].max() - y[half:].min()
        sustain = float(a2 / a1) if a1 > 0 else math.nan

    if dist < conv_tol:
        verdict = "converged"
    elif (
        amp[2] / eq[2] > amp_tol
        and not math.isnan(period)
        and cv < cv_tol
        and sustain >= sustain_tol
    ):
        verdict = "oscillating"
    else:
        verdict = "undecided"
    return OscillationReport(verdict, amp, period, cv, dist, sustain)
