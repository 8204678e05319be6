"""Time-dependent Schroedinger solver for the divided segment.

The particle lives on (-1, a(tau)) with V = -1 left of the origin and V = 0
right of it.  A point barrier at x = 0 of strength g = alpha / (1 - alpha)
interpolates between free passage (alpha = 0) and complete separation
(alpha = 1, handled as two independent Dirichlet problems).  The right wall
moves with the slow time tau = epsilon * t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _kernels
from .errors import DomainError, NumericalError
from .levelmap import map_forward
from .spectra import segment_map, SegmentModelParams

REPULSIVE = 1.0
ATTRACTIVE = -1.0


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-1, x_max] whose nodes include x = 0.

    Only the ``n_points`` interior nodes carry unknowns; x = -1 and x = x_max
    are Dirichlet ends.
    """

    n_points: int
    n_left: int

    @classmethod
    def for_length(cls, n_points: int, a_max: float, margin_cells: int = 3) -> "Grid":
        n_left = (n_points + 1 - margin_cells) // (a_max + 1.0)
        n_left = int(n_left)
        if n_left < 4:
            raise DomainError(f"{n_points} points are too few for a_max={a_max}")
        return cls(n_points, n_left)

    @property
    def dx(self) -> float:
        return 1.0 / self.n_left

    @property
    def x_min(self) -> float:
        return -1.0

    @property
    def x_max(self) -> float:
        return -1.0 + (self.n_points + 1) * self.dx

    @property
    def x(self) -> np.ndarray:
        return -1.0 + self.dx * np.arange(1, self.n_points + 1)

    @property
    def barrier_index(self) -> int:
        """0-based index of the node at x = 0."""
        return self.n_left - 1


@dataclass
class Hamiltonian:
    diag: np.ndarray
    off: np.ndarray
    active: np.ndarray
    grid: Grid
    a: float
    alpha: float

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = self.diag * psi
        out[:-1] += self.off * psi[1:]
        out[1:] += self.off * psi[:-1]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)


def build_hamiltonian(grid: Grid, a: float, alpha: float, sign: float = REPULSIVE) -> Hamiltonian:
    """Second-difference Hamiltonian with barrier and sub-cell right wall.

    ``sign=ATTRACTIVE`` gives the jump condition with the opposite sign;
    it binds a deep state under the barrier as alpha -> 1.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if not 2 * grid.dx < a <= grid.x_max - grid.dx:
        raise DomainError(f"wall position a={a} outside (2dx, x_max - dx] of the grid")
    n = grid.n_points
    diag = np.empty(n)
    off = np.empty(n - 1)
    active = np.empty(n, dtype=bool)
    _kernels.assemble(n, grid.dx, grid.barrier_index, float(a), float(alpha), float(sign), diag, off, active)
    return Hamiltonian(diag, off, active, grid, float(a), float(alpha))


@dataclass
class InstantaneousSpectrum:
    energies: np.ndarray
    states: np.ndarray  # shape (K, n_points), real, normalised with weight dx
    grid: Grid


def instantaneous_spectrum(H: Hamiltonian, K: int) -> InstantaneousSpectrum:
    """Lowest ``K`` eigenpairs of the frozen Hamiltonian on its active nodes."""
    idx = np.flatnonzero(H.active)
    if K < 1 or K >= idx.size:
        raise ValueError(f"K={K} must be between 1 and the {idx.size - 1} active nodes")
    d = H.diag[idx]
    adjacent = np.diff(idx) == 1
    e = np.where(adjacent, H.off[idx[:-1]], 0.0)
    try:
        w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, K - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    dx = H.grid.dx
    states = np.zeros((K, H.grid.n_points))
    states[:, idx] = v.T / math.sqrt(dx)
    for row in states:
        big = np.flatnonzero(np.abs(row) > 1e-8 * np.abs(row).max())
        if row[big[0]] < 0:
            row *= -1
    return InstantaneousSpectrum(w, states, H.grid)


@dataclass
class WaveState:
    psi: np.ndarray
    time: float
    grid: Grid

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dx)

    def copy(self) -> "WaveState":
        return WaveState(self.psi.copy(), self.time, self.grid)


def populations(state: WaveState, spec: InstantaneousSpectrum) -> np.ndarray:
    """I_k = |<psi_k | psi>|^2 for every retained eigenstate."""
    if state.grid != spec.grid:
        raise ValueError("state and spectrum live on different grids")
    amp = spec.states @ state.psi * state.grid.dx
    return np.abs(amp) ** 2


def energy_expectation(state: WaveState, H: Hamiltonian) -> float:
    return float(np.real(np.vdot(state.psi, H.apply(state.psi))) * state.grid.dx)


def weight_right(state: WaveState) -> float:
    """Probability on x > 0."""
    j0 = state.grid.barrier_index
    return float(np.sum(np.abs(state.psi[j0 + 1:]) ** 2) * state.grid.dx)


# --- schedules ---------------------------------------------------------------

def _ramp(u):
    """C1 cosine ramp from 0 at u=0 to 1 at u=1."""
    return 0.5 * (1.0 - np.cos(np.pi * np.clip(u, 0.0, 1.0)))


@dataclass(frozen=True)
class Schedule:
    """Periodic slow-time schedule for the wall position and barrier.

    a rises from a1 at tau1 to a2 at tau2 and returns to a1 at tau1 + period;
    alpha ramps 0 -> 1 on [tau1 - ramp, tau1], stays 1 until tau2 and ramps
    back to 0 on [tau2, tau2 + ramp].
    """

    a1: float = 1.0
    a2: float = 3.0
    tau1: float = 0.25
    tau2: float = 0.75
    period: float = 1.0
    ramp: float = 0.1
    epsilon: float = 2e-3
    sign: float = REPULSIVE

    def __post_init__(self):
        if not 0 < self.tau1 < self.tau2 < self.period:
            raise DomainError("need 0 < tau1 < tau2 < period")
        if not (self.a1 > 0 and self.a2 > 0):
            raise DomainError("a1 and a2 must be positive")
        if self.ramp <= 0 or self.tau1 - self.ramp < 0 or self.tau2 + self.ramp > self.period + self.tau1 - self.ramp:
            raise DomainError("barrier ramps must fit inside the coupled part of the period")
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")

    @property
    def a_max(self) -> float:
        return max(self.a1, self.a2)

    @property
    def separating(self) -> bool:
        return True

    def a(self, tau):
        u = np.mod(np.asarray(tau, dtype=float), self.period)
        rising = (u >= self.tau1) & (u <= self.tau2)
        up = self.a1 + (self.a2 - self.a1) * _ramp((u - self.tau1) / (self.tau2 - self.tau1))
        back = np.where(u < self.tau2, u + self.period, u)
        down = self.a2 + (self.a1 - self.a2) * _ramp((back - self.tau2) / (self.period + self.tau1 - self.tau2))
        return np.where(rising, up, down)

    def alpha(self, tau):
        u = np.mod(np.asarray(tau, dtype=float), self.period)
        on = _ramp((u - (self.tau1 - self.ramp)) / self.ramp)
        off = 1.0 - _ramp((u - self.tau2) / self.ramp)
        return np.where(u <= self.tau1, on, np.where(u <= self.tau2, 1.0, off))

    def checkpoints(self) -> list[tuple[str, float]]:
        return [
            ("tau1-", self.tau1 - self.ramp),
            ("tau1+", self.tau1),
            ("tau2-", self.tau2),
            ("tau2+", self.tau2 + self.ramp),
            ("T", self.period),
        ]


@dataclass(frozen=True)
class FrozenSchedule:
    """Constant wall position and barrier strength."""

    a_value: float = 2.0
    alpha_value: float = 0.0
    period: float = 1.0
    epsilon: float = 2e-3
    sign: float = REPULSIVE

    def __post_init__(self):
        if self.a_value <= 0 or not 0 <= self.alpha_value <= 1 or self.epsilon <= 0:
            raise DomainError("invalid frozen schedule")

    @property
    def a_max(self) -> float:
        return self.a_value

    @property
    def separating(self) -> bool:
        return False

    def a(self, tau):
        return np.full(np.shape(tau), self.a_value, dtype=float)

    def alpha(self, tau):
        return np.full(np.shape(tau), self.alpha_value, dtype=float)

    def checkpoints(self) -> list[tuple[str, float]]:
        p = self.period
        return [("tau1-", 0.15 * p), ("tau1+", 0.25 * p), ("tau2-", 0.75 * p), ("tau2+", 0.85 * p), ("T", p)]


def identity_schedule(a: float = 2.0, epsilon: float = 2e-3) -> FrozenSchedule:
    return FrozenSchedule(a_value=a, alpha_value=0.0, epsilon=epsilon)


def hamiltonian_at(grid: Grid, schedule, tau: float) -> Hamiltonian:
    return build_hamiltonian(grid, float(schedule.a(tau)), float(schedule.alpha(tau)), schedule.sign)


def auto_timestep(grid: Grid, schedule, K: int, factor: float = 0.1, samples: int = 9) -> float:
    """dt with dt * max|E| <= factor over the lowest K levels along the schedule."""
    taus = np.linspace(0.0, schedule.period, samples)
    emax = 0.0
    for tau in taus:
        w = instantaneous_spectrum(hamiltonian_at(grid, schedule, tau), K).energies
        emax = max(emax, float(np.max(np.abs(w))))
    return factor / emax


# --- propagation -------------------------------------------------------------

CHUNK = 50_000


def propagate(state: WaveState, schedule, t_span: tuple[float, float], dt: float,
              norm_tol: float = 1e-6, backend: str = "numba") -> WaveState:
    """Crank-Nicolson evolution from t_span[0] to t_span[1] (physical time).

    The step is shrunk slightly so that it divides the interval.  Raises
    ``NumericalError`` if the norm drifts by more than ``norm_tol``.
    """
    t0, t1 = map(float, t_span)
    if t1 < t0 or dt <= 0:
        raise ValueError("need t1 >= t0 and dt > 0")
    out = state.copy()
    if t1 == t0:
        return out
    nsteps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    h = (t1 - t0) / nsteps
    grid = state.grid
    norm0 = out.norm
    psi = np.ascontiguousarray(out.psi, dtype=np.complex128)
    for start in range(0, nsteps, CHUNK):
        stop = min(nsteps, start + CHUNK)
        tau_mid = schedule.epsilon * (t0 + (np.arange(start, stop) + 0.5) * h)
        a_mid = np.ascontiguousarray(schedule.a(tau_mid), dtype=float)
        al_mid = np.ascontiguousarray(schedule.alpha(tau_mid), dtype=float)
        if backend == "numba":
            _kernels.cn_run(psi, grid.dx, grid.barrier_index, float(schedule.sign), a_mid, al_mid, h)
        elif backend == "scipy":
            psi = _cn_run_scipy(psi, grid, schedule.sign, a_mid, al_mid, h)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        norm = float(np.sum(np.abs(psi) ** 2) * grid.dx)
        if not math.isfinite(norm) or abs(norm - norm0) > norm_tol:
            raise NumericalError(
                f"norm drifted from {norm0!r} to {norm!r} by t={t0 + stop * h:g}")
    out.psi = psi
    out.time = t1
    return out


def _cn_run_scipy(psi, grid, sign, a_mid, al_mid, h):
    """Reference stepper using scipy's banded LU with pivoting."""
    from scipy.linalg import solve_banded

    for a, al in zip(a_mid, al_mid):
        H = build_hamiltonian(grid, a, al, sign)
        rhs = psi - 0.5j * h * H.apply(psi)
        ab = np.zeros((3, psi.size), dtype=complex)
        ab[0, 1:] = 0.5j * h * H.off
        ab[1] = 1.0 + 0.5j * h * H.diag
        ab[2, :-1] = 0.5j * h * H.off
        psi = solve_banded((1, 1), ab, rhs)
    return psi


# --- one-period experiment ---------------------------------------------------

@dataclass
class Checkpoint:
    label: str
    tau: float
    populations: np.ndarray
    energies: np.ndarray
    norm: float
    right_weight: float

    @property
    def dominant(self) -> int:
        return int(np.argmax(self.populations)) + 1


@dataclass
class PeriodReport:
    k0: int
    k_predicted: int
    epsilon: float
    dt: float
    checkpoints: list[Checkpoint]
    energy_series: list[tuple[float, float, float, float]] = field(default_factory=list)  # (t, tau, <H>, norm)

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    @property
    def k_observed(self) -> int:
        return self.final.dominant

    @property
    def predicted_population(self) -> float:
        p = self.final.populations
        return float(p[self.k_predicted - 1]) if self.k_predicted <= p.size else 0.0

    @property
    def norm_drift(self) -> float:
        return max(abs(c.norm - 1.0) for c in self.checkpoints)

    def summary(self) -> str:
        return (f"k0={self.k0} predicted={self.k_predicted} observed={self.k_observed} "
                f"I_predicted={self.predicted_population:.6f} epsilon={self.epsilon:g}")


def predicted_level(k0: int, schedule) -> int:
    """Level after one period according to the adiabatic level map."""
    if not schedule.separating:
        return k0
    a1 = float(schedule.a(schedule.tau1))
    a2 = float(schedule.a(schedule.tau2))
    return map_forward(k0, segment_map(SegmentModelParams(a1, a2, max(64, 4 * k0))))


def run_period_experiment(k0: int, schedule, grid: Optional[Grid] = None, K: int = 12,
                          dt: Optional[float] = None, energy_samples: int = 50,
                          backend: str = "numba") -> PeriodReport:
    """Start in instantaneous eigenstate k0 at tau = 0 and evolve one period."""
    if grid is None:
        grid = Grid.for_length(600, schedule.a_max)
    if not 1 <= k0 <= K:
        raise ValueError(f"k0={k0} must lie in 1..K={K}")
    if dt is None:
        dt = auto_timestep(grid, schedule, K)
    eps = schedule.epsilon
    spec0 = instantaneous_spectrum(hamiltonian_at(grid, schedule, 0.0), K)
    state = WaveState(spec0.states[k0 - 1].astype(complex), 0.0, grid)

    marks = {tau: label for label, tau in schedule.checkpoints()}
    sample_taus = np.linspace(0.0, schedule.period, energy_samples + 1)[1:]
    stops = sorted(set(marks) | set(float(t) for t in sample_taus))

    series = []
    H = hamiltonian_at(grid, schedule, 0.0)
    series.append((0.0, 0.0, energy_expectation(state, H), state.norm))
    checkpoints = []
    for tau in stops:
        state = propagate(state, schedule, (state.time, tau / eps), dt, backend=backend)
        H = hamiltonian_at(grid, schedule, tau)
        series.append((state.time, tau, energy_expectation(state, H), state.norm))
        if tau in marks:
            spec = instantaneous_spectrum(H, K)
            checkpoints.append(Checkpoint(marks[tau], tau, populations(state, spec),
                                          spec.energies, state.norm, weight_right(state)))
    return PeriodReport(k0, predicted_level(k0, schedule), eps, dt, checkpoints, series)


def eigen_indicators(spec: InstantaneousSpectrum) -> np.ndarray:
    """+1 for eigenstates living mostly on x < 0, -1 otherwise."""
    j0 = spec.grid.barrier_index
    left = np.sum(spec.states[:, :j0] ** 2, axis=1) * spec.grid.dx
    return np.where(left > 0.5, 1, -1)
