"""Run configuration files (JSON) for the command-line tools.

Physical quantities carry their unit in the key name (``tau2_min``,
``c_pg_ml``); cortisol-scale concentrations may also be given in ng/ml
(``c_ng_ml``, ``xbar3_ng_ml``) and are converted to pg/ml on load.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import DomainError
from .kernels import KernelSet
from .model import PHYSIOLOGY, SystemParams, fit_params

SCHEMA_VERSION = 1
NG_TO_PG = 1000.0


class ConfigError(DomainError):
    """Invalid configuration; the message starts with the offending field path."""


def _check_keys(block: dict, allowed: set, path: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object, got {type(block).__name__}")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")


def _number(block: dict, key: str, path: str, default=None, positive=True):
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v}")
    return float(v)


def _concentration(block, stem, path, default=None):
    pg, ng = f"{stem}_pg_ml", f"{stem}_ng_ml"
    if pg in block and ng in block:
        raise ConfigError(f"{path}: give only one of {pg}, {ng}")
    if ng in block:
        return NG_TO_PG * _number(block, ng, path)
    return _number(block, pg, path, default)


@dataclass(frozen=True)
class Physiology:
    T1_min: float
    T2_min: float
    T3_min: float
    xbar1_pg_ml: float
    xbar2_pg_ml: float
    xbar3_pg_ml: float

    @classmethod
    def from_dict(cls, d, path="physiology"):
        _check_keys(d, {"T1_min", "T2_min", "T3_min", "xbar1_pg_ml", "xbar2_pg_ml", "xbar3_pg_ml", "xbar3_ng_ml"}, path)
        return cls(
            _number(d, "T1_min", path),
            _number(d, "T2_min", path),
            _number(d, "T3_min", path),
            _number(d, "xbar1_pg_ml", path),
            _number(d, "xbar2_pg_ml", path),
            _concentration(d, "xbar3", path),
        )

    @classmethod
    def reference(cls):
        p = PHYSIOLOGY
        return cls(p["T1"], p["T2"], p["T3"], p["xbar1"], p["xbar2"], p["xbar3"])

    def as_fit_kwargs(self) -> dict:
        return dict(
            T1=self.T1_min, T2=self.T2_min, T3=self.T3_min,
            xbar1=self.xbar1_pg_ml, xbar2=self.xbar2_pg_ml, xbar3=self.xbar3_pg_ml,
        )


@dataclass(frozen=True)
class FeedbackSpec:
    alpha: float
    eta: float
    mu: float
    c_pg_ml: float

    @classmethod
    def from_dict(cls, d, path="feedback"):
        _check_keys(d, {"alpha", "eta", "mu", "c_pg_ml", "c_ng_ml"}, path)
        eta = _number(d, "eta", path)
        return cls(_number(d, "alpha", path), eta, _number(d, "mu", path, eta), _concentration(d, "c", path))


@dataclass(frozen=True)
class CriticalSettings:
    kind: str | None = None
    n: int = 4
    beta_min: float | None = None
    branches: int = 1

    @classmethod
    def from_dict(cls, d, path="critical"):
        _check_keys(d, {"kind", "n", "beta_min", "branches"}, path)
        kind = d.get("kind")
        if kind not in (None, "dirac", "gamma", "mixed"):
            raise ConfigError(f"{path}.kind: must be dirac, gamma or mixed, got {kind!r}")
        n = d.get("n", 4)
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"{path}.n: must be a positive integer, got {n!r}")
        beta = _number(d, "beta_min", path) if "beta_min" in d else None
        branches = d.get("branches", 1)
        if not isinstance(branches, int) or branches < 1:
            raise ConfigError(f"{path}.branches: must be a positive integer, got {branches!r}")
        return cls(kind, n, beta, branches)


@dataclass(frozen=True)
class SolverSettings:
    h_min: float = 0.01
    t_end_min: float = 5000.0
    q: float | None = None
    taus_min: tuple | None = None  # fractional model delays tau1, tau2, tau31, tau32
    transient_fraction: float = 0.5
    history_perturbation: float = 0.01
    corrector_iterations: int = 1

    @classmethod
    def from_dict(cls, d, path="solver"):
        _check_keys(
            d,
            {"h_min", "t_end_min", "q", "taus_min", "transient_fraction", "history_perturbation", "corrector_iterations"},
            path,
        )
        q = _number(d, "q", path) if "q" in d else None
        if q is not None and not q <= 1:
            raise ConfigError(f"{path}.q: must lie in (0, 1], got {q}")
        taus = d.get("taus_min")
        if taus is not None:
            if not isinstance(taus, list) or len(taus) != 4:
                raise ConfigError(f"{path}.taus_min: expected [tau1, tau2, tau31, tau32]")
            taus = tuple(_number({"t": t}, "t", f"{path}.taus_min", positive=False) for t in taus)
        tf = _number(d, "transient_fraction", path, 0.5, positive=False)
        if not 0 <= tf < 1:
            raise ConfigError(f"{path}.transient_fraction: must lie in [0, 1)")
        return cls(
            _number(d, "h_min", path, 0.01),
            _number(d, "t_end_min", path, 5000.0),
            q,
            taus,
            tf,
            _number(d, "history_perturbation", path, 0.01, positive=False),
            int(d.get("corrector_iterations", 1)),
        )


@dataclass(frozen=True)
class ScanSettings:
    alpha: float | None = None
    kind: str = "dirac"
    n: int = 4
    c_range_pg_ml: tuple = (100.0, 10_000.0)
    eta_range: tuple = (0.01, 1.0)
    grid: tuple = (100, 100)

    @classmethod
    def from_dict(cls, d, path="scan"):
        _check_keys(d, {"alpha", "kind", "n", "c_range_pg_ml", "eta_range", "grid"}, path)
        kind = d.get("kind", "dirac")
        if kind not in ("dirac", "gamma"):
            raise ConfigError(f"{path}.kind: must be dirac or gamma, got {kind!r}")
        return cls(
            _number(d, "alpha", path) if "alpha" in d else None,
            kind,
            int(d.get("n", 4)),
            tuple(float(v) for v in d.get("c_range_pg_ml", (100.0, 10_000.0))),
            tuple(float(v) for v in d.get("eta_range", (0.01, 1.0))),
            tuple(int(v) for v in d.get("grid", (100, 100))),
        )


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "custom"
    physiology: Physiology | None = None
    feedback: FeedbackSpec | None = None
    params: SystemParams | None = None
    kernels: KernelSet | None = None
    critical: CriticalSettings = field(default_factory=CriticalSettings)
    solver: SolverSettings = field(default_factory=SolverSettings)
    scan: ScanSettings = field(default_factory=ScanSettings)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _check_keys(
            d,
            {"schema_version", "scenario", "physiology", "feedback", "params", "kernels", "critical", "solver", "scan", "output_dir"},
            "config",
        )
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"config.schema_version: unsupported version {version!r}")
        try:
            kernels = KernelSet.from_dict(d["kernels"]) if "kernels" in d else None
        except DomainError as exc:
            raise ConfigError(f"kernels: {exc}") from exc
        try:
            params = SystemParams.from_dict(d["params"]) if "params" in d else None
        except (DomainError, TypeError) as exc:
            raise ConfigError(f"params: {exc}") from exc
        return cls(
            scenario=str(d.get("scenario", "custom")),
            physiology=Physiology.from_dict(d["physiology"]) if "physiology" in d else None,
            feedback=FeedbackSpec.from_dict(d["feedback"]) if "feedback" in d else None,
            params=params,
            kernels=kernels,
            critical=CriticalSettings.from_dict(d.get("critical", {})),
            solver=SolverSettings.from_dict(d.get("solver", {})),
            scan=ScanSettings.from_dict(d.get("scan", {})),
            output_dir=d.get("output_dir"),
        )

    def system_params(self) -> SystemParams:
        if self.params is not None:
            return self.params
        if self.physiology is None:
            raise ConfigError("physiology: required (or give a fitted params block)")
        if self.feedback is None:
            raise ConfigError("feedback: required to fit k1, k2")
        fb = self.feedback
        try:
            return fit_params(**self.physiology.as_fit_kwargs(), alpha=fb.alpha, eta=fb.eta, mu=fb.mu, c=fb.c_pg_ml)
        except DomainError as exc:
            raise ConfigError(f"feedback: {exc}") from exc


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from exc
    return RunConfig.from_dict(data)


def bundled_scenarios() -> list[str]:
    root = resources.files("hpaxis") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_scenario(name: str) -> RunConfig:
    root = resources.files("hpaxis") / "scenarios"
    f = root / f"{name}.json"
    if not f.is_file():
        raise ConfigError(f"scenario: unknown bundled scenario {name!r}; available: {bundled_scenarios()}")
    return RunConfig.from_dict(json.loads(f.read_text()))
