"""Hopf bifurcation analysis and simulation of an HPA-axis feedback model with
distributed delays, plus a delayed fractional-order variant."""
from .bifurcation import (
    CrossingPoint,
    critical_for_kernels,
    dirac_critical,
    find_omega0,
    gamma_critical,
    mixed_critical,
    region_scan,
)
from .errors import (
    DomainError,
    GridError,
    HPAError,
    NoRootError,
    NumericalError,
    PoleError,
    PreconditionError,
    UnsupportedKernelError,
)
from .fractional import FracConfig, integrate_fractional
from .kernels import Dirac, Gamma, KernelSet, ProductForm
from .model import Equilibrium, HillFeedback, SystemParams, find_equilibrium, fit_params, reference_params
from .simulate import HistoryFunction, Trajectory, detect_oscillation, integrate_kernels
from .stability import check_inequalities, matignon_check, q_eval

__version__ = "0.1.0"
