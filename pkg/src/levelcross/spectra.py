"""Two-group spectra at the critical moments and the indicator sequences they induce.

Group I is labelled ``+1`` and group II ``-1``.  For the divided segment
group I is the left well, for the spin oscillator it is spin up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateSpectrum, DomainError, TruncationError
from .levelmap import AdiabaticLevelMap, IndicatorSequence

TIE_TOL = 1e-9
FLOOR_MARGIN = 1e-9

EnergyFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpectralSnapshot:
    """Group I and group II energies at one moment.

    If ``complete`` is false the lists are truncations of infinite spectra
    and only merged levels up to ``min(group1[-1], group2[-1])`` are
    trusted.  A complete snapshot describes a finite system exactly.
    """

    group1_energies: np.ndarray
    group2_energies: np.ndarray
    label: str = ""
    complete: bool = False

    def __post_init__(self):
        g1 = np.array(self.group1_energies, dtype=float).reshape(-1)
        g2 = np.array(self.group2_energies, dtype=float).reshape(-1)
        for name, g in (("group1", g1), ("group2", g2)):
            if not np.all(np.isfinite(g)):
                raise ValueError(f"{name} energies must be finite")
            if np.any(np.diff(g) <= 0):
                raise ValueError(f"{name} energies must be strictly increasing")
            g.flags.writeable = False
        if g1.size == 0 and g2.size == 0:
            raise ValueError("snapshot has no energies")
        object.__setattr__(self, "group1_energies", g1)
        object.__setattr__(self, "group2_energies", g2)
        _check_ties(g1, g2)

    def __eq__(self, other):
        if not isinstance(other, SpectralSnapshot):
            return NotImplemented
        return (np.array_equal(self.group1_energies, other.group1_energies)
                and np.array_equal(self.group2_energies, other.group2_energies)
                and self.label == other.label and self.complete == other.complete)

    __hash__ = None

    def merged(self) -> tuple[np.ndarray, np.ndarray]:
        """Merged energies and their group labels, restricted to the trusted prefix."""
        e, lab = _merge(self.group1_energies, self.group2_energies)
        n = self.reliable_levels()
        return e[:n], lab[:n]

    def reliable_levels(self) -> int:
        g1, g2 = self.group1_energies, self.group2_energies
        if self.complete:
            return len(g1) + len(g2)
        if g1.size == 0 or g2.size == 0:
            # nothing is known about where the missing group starts
            return 0
        cut = min(g1[-1], g2[-1])
        return int(np.searchsorted(g1, cut, side="right") + np.searchsorted(g2, cut, side="right"))


def _merge(g1: np.ndarray, g2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e = np.concatenate([g1, g2])
    lab = np.concatenate([np.ones(g1.size, dtype=np.int8), -np.ones(g2.size, dtype=np.int8)])
    order = np.argsort(e, kind="stable")
    return e[order], lab[order]


def _check_ties(g1: np.ndarray, g2: np.ndarray, tol: float = TIE_TOL) -> None:
    if g1.size == 0 or g2.size == 0:
        return
    e, lab = _merge(g1, g2)
    gap = np.diff(e)
    bad = np.nonzero((gap < tol) & (lab[1:] != lab[:-1]))[0]
    if bad.size:
        i = int(bad[0])
        raise DegenerateSpectrum(
            f"cross-group energies {e[i]!r} and {e[i + 1]!r} coincide within {tol:g}"
        )


def snapshot_from_model(energy1: EnergyFn, energy2: EnergyFn, K: int, label: str = "") -> SpectralSnapshot:
    """Generate enough of both spectra that the lowest ``K`` merged levels are settled.

    Each group is cut one entry past the K-th merged energy, so both lists
    end above it.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    idx = np.arange(1, K + 2, dtype=float)
    g1 = np.asarray(energy1(idx), dtype=float)
    g2 = np.asarray(energy2(idx), dtype=float)
    e, _ = _merge(g1, g2)
    ek = e[K - 1]
    n1 = int(np.searchsorted(g1, ek, side="right")) + 1
    n2 = int(np.searchsorted(g2, ek, side="right")) + 1
    return SpectralSnapshot(g1[:n1], g2[:n2], label=label)


def indicators_from_snapshot(snap: SpectralSnapshot, provider=None) -> IndicatorSequence:
    """sigma(k) = +1 iff the k-th merged level belongs to group I."""
    _, lab = snap.merged()
    return IndicatorSequence(lab, provider=provider)


def energy_of_level(k: int, snap: SpectralSnapshot) -> float:
    e, _ = snap.merged()
    if k < 1 or k > e.size:
        raise TruncationError(f"level {k} outside the {e.size} trusted levels of the snapshot")
    return float(e[k - 1])


class _ModelProvider:
    """Extends an indicator sequence by regenerating a longer model snapshot."""

    def __init__(self, energy1: EnergyFn, energy2: EnergyFn):
        self.energy1 = energy1
        self.energy2 = energy2

    def __call__(self, start: int, count: int) -> np.ndarray:
        n = start + count
        snap = snapshot_from_model(self.energy1, self.energy2, n)
        _, lab = snap.merged()
        return lab[start:n]


def model_indicators(energy1: EnergyFn, energy2: EnergyFn, K: int, label: str = "") -> IndicatorSequence:
    snap = snapshot_from_model(energy1, energy2, K, label)
    return indicators_from_snapshot(snap, provider=_ModelProvider(energy1, energy2))


# --- divided segment -------------------------------------------------------

@dataclass(frozen=True)
class SegmentModelParams:
    a1: float = 1.0
    a2: float = 3.0
    level_count: int = 100

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise DomainError("segment lengths a1, a2 must be positive")
        if self.a1 == self.a2:
            raise DomainError("a1 and a2 must differ")
        if self.level_count < 1:
            raise DomainError("level_count must be >= 1")


def left_energies(n: np.ndarray) -> np.ndarray:
    """Left well (-1, 0) with V = -1."""
    return -1.0 + (np.pi * np.asarray(n, dtype=float)) ** 2


def right_energies(m: np.ndarray, a: float) -> np.ndarray:
    """Right well (0, a) with V = 0."""
    return (np.pi * np.asarray(m, dtype=float) / a) ** 2


def _segment_fns(a: float):
    if not a > 0:
        raise DomainError(f"segment length must be positive, got {a}")
    return left_energies, (lambda m: right_energies(m, a))


def segment_snapshot(a: float, K: int) -> SpectralSnapshot:
    e1, e2 = _segment_fns(a)
    return snapshot_from_model(e1, e2, K, label=f"segment a={a:g}")


def segment_indicators(a: float, K: int = 64) -> IndicatorSequence:
    """Lazily extendable left/right indicator sequence for right-well length ``a``."""
    e1, e2 = _segment_fns(a)
    return model_indicators(e1, e2, K, label=f"segment a={a:g}")


def segment_map(params: SegmentModelParams) -> AdiabaticLevelMap:
    return AdiabaticLevelMap(
        segment_indicators(params.a1, params.level_count),
        segment_indicators(params.a2, params.level_count),
    )


def _safe_floor(x: float) -> int:
    f = math.floor(x)
    if x - f < FLOOR_MARGIN or f + 1 - x < FLOOR_MARGIN:
        raise DegenerateSpectrum(f"{x!r} is within {FLOOR_MARGIN:g} of an integer")
    return int(f)


def left_position_closed_form(n: int, a: float) -> int:
    """Merged position of left state n: n + floor(a * sqrt(n^2 - 1/pi^2))."""
    return n + _safe_floor(a * math.sqrt(n * n - 1.0 / math.pi**2))


def right_position_closed_form(m: int, a: float) -> int:
    """Merged position of right state m: m + floor(sqrt((m/a)^2 + 1/pi^2))."""
    return m + _safe_floor(math.sqrt((m / a) ** 2 + 1.0 / math.pi**2))


# --- spin-1/2 oscillator --------------------------------------------------

@dataclass(frozen=True)
class SpinModelParams:
    b1: float = -0.25
    b2: float = 0.75
    level_count: int = 50

    def __post_init__(self):
        for name, b in (("b1", self.b1), ("b2", self.b2)):
            _check_spin_field(b, name)
        if self.level_count < 1:
            raise DomainError("level_count must be >= 1")


def _check_spin_field(b: float, name: str = "B") -> None:
    # up and down ladders coincide exactly when 2B is an integer
    if not math.isfinite(b):
        raise DomainError(f"{name} must be finite")
    if abs(2 * b - round(2 * b)) < TIE_TOL:
        raise DegenerateSpectrum(f"{name}={b:g}: 2B is an integer, up and down levels coincide")


def spin_fns(b: float):
    _check_spin_field(b)
    up = lambda m: np.asarray(m, dtype=float) - 0.5 - b  # noqa: E731
    down = lambda n: np.asarray(n, dtype=float) - 0.5 + b  # noqa: E731
    return up, down


def spin_snapshot(b: float, K: int) -> SpectralSnapshot:
    up, down = spin_fns(b)
    return snapshot_from_model(up, down, K, label=f"spin B={b:g}")


def spin_indicators(b: float, K: int = 64) -> IndicatorSequence:
    up, down = spin_fns(b)
    return model_indicators(up, down, K, label=f"spin B={b:g}")


def spin_map(params: SpinModelParams) -> AdiabaticLevelMap:
    return AdiabaticLevelMap(
        spin_indicators(params.b1, params.level_count),
        spin_indicators(params.b2, params.level_count),
    )


# --- user spectra ----------------------------------------------------------

def snapshot_map(snap1: SpectralSnapshot, snap2: SpectralSnapshot) -> AdiabaticLevelMap:
    """Level map from explicit snapshots at the separation and reconnection moments."""
    return AdiabaticLevelMap(indicators_from_snapshot(snap1), indicators_from_snapshot(snap2))


def fit_energy_exponent(snap: SpectralSnapshot, k_min: int = 1) -> Optional[float]:
    """Least-squares exponent nu in E_k ~ k^nu over the positive merged energies.

    Returns ``None`` when fewer than two levels are usable.
    """
    e, _ = snap.merged()
    k = np.arange(1, e.size + 1)
    keep = (k >= k_min) & (e > 0)
    if keep.sum() < 2:
        return None
    nu, _ = np.polyfit(np.log(k[keep]), np.log(e[keep]), 1)
    return float(nu)
