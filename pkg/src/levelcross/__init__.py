"""Adiabatic renumbering of energy levels under periodic separation and rejoining."""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateSpectrum,
    DomainError,
    LevelcrossError,
    LevelOverflowError,
    NumericalError,
    TruncationError,
)
from .levelmap import AdiabaticLevelMap, IndicatorSequence, LevelTrajectory, Outcome, iterate  # noqa: E402
from .spectra import SpectralSnapshot, segment_map, spin_map  # noqa: E402
from .stochastic import BernoulliParams, bernoulli_map, kl_rho  # noqa: E402
