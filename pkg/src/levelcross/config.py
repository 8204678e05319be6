"""Experiment configuration: YAML file -> validated dataclasses.

Unknown keys anywhere are errors.  Every section has defaults, so an empty
file is a valid segment-model configuration.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError, DegenerateSpectrum, DomainError
from .spectra import SegmentModelParams, SpinModelParams
from .stochastic import BernoulliParams

MODELS = ("segment", "spin", "bernoulli", "user-spectra", "tdse")


@dataclass
class SegmentSection:
    a1: float = 1.0
    a2: float = 3.0
    level_count: int = 100


@dataclass
class SpinSection:
    b1: float = -0.25
    b2: float = 0.75
    level_count: int = 50


@dataclass
class BernoulliSection:
    beta: float = 0.5
    gamma: float = 0.25
    stream_id: int = 0
    level_count: int = 1000
    k_start: int = 100_000
    trials: int = 10_000
    lln_seeds: int = 50
    lln_k0: int = 100
    lln_periods: int = 200
    redraw: bool = True


@dataclass
class UserSpectraSection:
    path: Optional[str] = None


@dataclass
class TrajectorySection:
    k0: list = field(default_factory=list)
    step_limit: int = 60
    escape_threshold: int = 1_000_000
    backward: bool = False


@dataclass
class TdseSection:
    k0: int = 3
    epsilon: float = 2e-3
    n_points: int = 600
    levels: int = 12
    a1: float = 1.0
    a2: float = 3.0
    tau1: float = 0.25
    tau2: float = 0.75
    period: float = 1.0
    ramp: float = 0.1
    identity: bool = False
    dt_factor: float = 0.1
    energy_samples: int = 50
    barrier: str = "repulsive"


@dataclass
class OutputSection:
    dir: str = "out"


@dataclass
class ExperimentConfig:
    model: str = "segment"
    seed: int = 0
    segment: SegmentSection = field(default_factory=SegmentSection)
    spin: SpinSection = field(default_factory=SpinSection)
    bernoulli: BernoulliSection = field(default_factory=BernoulliSection)
    user_spectra: UserSpectraSection = field(default_factory=UserSpectraSection)
    trajectory: TrajectorySection = field(default_factory=TrajectorySection)
    tdse: TdseSection = field(default_factory=TdseSection)
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        """sha256 of the experiment parameters; the output location is excluded."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def spectra_path(self) -> Path:
        p = Path(self.user_spectra.path)
        return p if p.is_absolute() else self.base_dir / p

    def validate(self) -> None:
        """Check every model constraint before anything is computed."""
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {self.model!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            SegmentModelParams(self.segment.a1, self.segment.a2, self.segment.level_count)
            SpinModelParams(self.spin.b1, self.spin.b2, self.spin.level_count)
            b = self.bernoulli
            BernoulliParams(b.beta, b.gamma, self.seed, b.stream_id)
        except (DomainError, DegenerateSpectrum) as exc:
            raise ConfigError(str(exc)) from None
        b = self.bernoulli
        for name in ("level_count", "k_start", "trials", "lln_seeds", "lln_k0"):
            if getattr(b, name) < 1:
                raise ConfigError(f"bernoulli.{name} must be >= 1")
        if b.lln_periods < 0:
            raise ConfigError("bernoulli.lln_periods must be >= 0")
        t = self.trajectory
        if any(not isinstance(k, int) or isinstance(k, bool) or k < 1 for k in t.k0):
            raise ConfigError("trajectory.k0 must be a list of positive integers")
        if t.step_limit < 1 or t.escape_threshold < 1:
            raise ConfigError("trajectory.step_limit and escape_threshold must be >= 1")
        if self.model == "user-spectra":
            if not self.user_spectra.path:
                raise ConfigError("model 'user-spectra' needs user_spectra.path")
            if not self.spectra_path().is_file():
                raise ConfigError(f"spectrum file {self.spectra_path()} does not exist")
        self._validate_tdse()

    def _validate_tdse(self) -> None:
        from .tdse import FrozenSchedule, Schedule

        d = self.tdse
        if d.barrier not in ("repulsive", "attractive"):
            raise ConfigError("tdse.barrier must be 'repulsive' or 'attractive'")
        if d.n_points < 50:
            raise ConfigError("tdse.n_points must be >= 50")
        if not 1 <= d.k0 <= d.levels:
            raise ConfigError("tdse.k0 must lie in 1..tdse.levels")
        if d.dt_factor <= 0 or d.energy_samples < 1:
            raise ConfigError("tdse.dt_factor must be > 0 and energy_samples >= 1")
        try:
            self.schedule()
        except DomainError as exc:
            raise ConfigError(f"tdse: {exc}") from None

    def schedule(self):
        from .tdse import ATTRACTIVE, REPULSIVE, FrozenSchedule, Schedule

        d = self.tdse
        sign = REPULSIVE if d.barrier == "repulsive" else ATTRACTIVE
        if d.identity:
            return FrozenSchedule(a_value=d.a1, alpha_value=0.0, period=d.period,
                                  epsilon=d.epsilon, sign=sign)
        return Schedule(d.a1, d.a2, d.tau1, d.tau2, d.period, d.ramp, d.epsilon, sign)


_SECTIONS = {
    "segment": SegmentSection,
    "spin": SpinSection,
    "bernoulli": BernoulliSection,
    "user_spectra": UserSpectraSection,
    "trajectory": TrajectorySection,
    "tdse": TdseSection,
    "output": OutputSection,
}


def _coerce(section: str, name: str, value, default):
    where = f"{section}.{name}" if section else name
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, str):
            # YAML 1.1 reads 2e-3 (no decimal point) as a string
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list, got {value!r}")
        return value
    if default is None or isinstance(default, str):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    return value


def _build_section(name: str, cls, raw) -> object:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    obj = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}; allowed: {', '.join(sorted(known))}")
        setattr(obj, key, _coerce(name, key, value, getattr(obj, key)))
    return obj


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping at top level")
    cfg = ExperimentConfig(base_dir=Path(base_dir))
    for key, value in raw.items():
        if key in _SECTIONS:
            setattr(cfg, key, _build_section(key, _SECTIONS[key], value))
        elif key in ("model", "seed"):
            setattr(cfg, key, _coerce("", key, value, getattr(cfg, key)))
        else:
            allowed = ", ".join(sorted(["model", "seed", *_SECTIONS]))
            raise ConfigError(f"unknown top-level key {key!r}; allowed: {allowed}")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)
