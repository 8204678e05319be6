"""Indicator sequences and the adiabatic level renumbering map.

Level numbers are 1-based throughout.  A sequence ``sigma`` labels the
energy-ordered eigenstates at one critical moment: ``+1`` for group I,
``-1`` for group II.  One oscillation period sends level ``k`` to the level
``kbar`` that has the same group and the same within-group index at the
reconnection moment.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import LevelOverflowError, TruncationError

# level numbers are checked against the signed 64-bit range used for storage
MAX_LEVEL = 2**63 - 1
DEFAULT_MAX_LENGTH = 2**24

# provider(start, count) -> the values sigma(start+1), ..., sigma(start+count)
Provider = Callable[[int, int], Sequence[int]]


def _check_level(k: int, name: str = "k") -> int:
    if isinstance(k, (bool, float)) or int(k) != k:
        raise TypeError(f"{name} must be an integer, got {k!r}")
    k = int(k)
    if k < 1:
        raise ValueError(f"{name} must be >= 1, got {k}")
    if k > MAX_LEVEL:
        raise LevelOverflowError(f"{name}={k} exceeds the 64-bit level range")
    return k


class IndicatorSequence:
    """A +/-1 sequence indexed from 1 with prefix sums and lazy extension.

    ``provider`` is called as ``provider(start, count)`` whenever a query
    needs entries beyond the stored prefix; it must return exactly ``count``
    values for positions ``start+1 .. start+count``.  Without a provider the
    sequence is finite and out-of-range queries raise ``TruncationError``.
    Extension mutates the object, so a sequence with a provider must not be
    shared between threads without external locking.
    """

    def __init__(
        self,
        values: Iterable[int] = (),
        provider: Optional[Provider] = None,
        max_length: int = DEFAULT_MAX_LENGTH,
    ):
        self.provider = provider
        self.max_length = int(max_length)
        self._n = 0
        self._sigma = np.empty(0, dtype=np.int8)
        self._plus = np.empty(0, dtype=np.int64)
        self._minus = np.empty(0, dtype=np.int64)
        self._append(np.asarray(values if isinstance(values, np.ndarray) else list(values), dtype=np.int64))

    def __len__(self) -> int:
        return self._n

    def __repr__(self) -> str:
        head = ",".join("+" if v > 0 else "-" for v in self._sigma[: min(self._n, 12)])
        more = "..." if self._n > 12 or self.provider is not None else ""
        return f"IndicatorSequence(len={self._n}, [{head}{more}])"

    @property
    def values(self) -> np.ndarray:
        """Stored values sigma(1..len) as a read-only int8 array."""
        out = self._sigma[: self._n]
        out.flags.writeable = False
        return out

    @property
    def prefix_sums(self) -> np.ndarray:
        """S(1..len), where S(k) = sigma(1) + ... + sigma(k)."""
        return self._plus[: self._n] - self._minus[: self._n]

    def _append(self, new: np.ndarray) -> None:
        new = np.asarray(new)
        if new.size == 0:
            return
        if new.ndim != 1 or not np.all((new == 1) | (new == -1)):
            raise ValueError("indicator values must be +1 or -1")
        m = self._n + new.size
        if m > self.max_length:
            raise LevelOverflowError(
                f"indicator sequence would grow to {m} entries (max_length={self.max_length})"
            )
        if m > self._sigma.size:
            cap = max(m, 2 * self._sigma.size, 64)
            self._sigma = np.resize(self._sigma, cap)
            self._plus = np.resize(self._plus, cap)
            self._minus = np.resize(self._minus, cap)
        base_p = int(self._plus[self._n - 1]) if self._n else 0
        base_m = int(self._minus[self._n - 1]) if self._n else 0
        is_plus = new > 0
        self._sigma[self._n : m] = np.where(is_plus, 1, -1)
        np.cumsum(is_plus, out=self._plus[self._n : m])
        self._plus[self._n : m] += base_p
        np.cumsum(~is_plus, out=self._minus[self._n : m])
        self._minus[self._n : m] += base_m
        self._n = m

    def extend(self, count: int) -> None:
        """Pull ``count`` more entries from the provider."""
        if count <= 0:
            return
        if self.provider is None:
            raise TruncationError(
                f"sequence truncated at k={self._n} and has no provider"
            )
        if self._n + count > self.max_length:
            count = self.max_length - self._n
            if count <= 0:
                raise LevelOverflowError(
                    f"indicator sequence reached max_length={self.max_length}"
                )
        new = np.asarray(self.provider(self._n, count))
        if new.size != count:
            raise ValueError(f"provider returned {new.size} values, expected {count}")
        self._append(new)

    def ensure(self, k: int) -> None:
        """Make sure sigma(k) is stored."""
        if k > self._n:
            if k > self.max_length:
                raise LevelOverflowError(
                    f"level {k} exceeds indicator max_length={self.max_length}"
                )
            # geometric growth keeps repeated small extensions cheap
            self.extend(max(k - self._n, self._n))

    def sigma(self, k: int) -> int:
        k = _check_level(k)
        self.ensure(k)
        return int(self._sigma[k - 1])

    def prefix_sum(self, k: int) -> int:
        if k == 0:
            return 0
        k = _check_level(k)
        self.ensure(k)
        return int(self._plus[k - 1] - self._minus[k - 1])

    def count(self, group: int, k: int) -> int:
        """Number of entries equal to ``group`` among sigma(1..k)."""
        if k == 0:
            return 0
        self.ensure(k)
        arr = self._plus if group > 0 else self._minus
        return int(arr[k - 1])

    def find(self, group: int, index: int) -> int:
        """Position of the ``index``-th entry equal to ``group``."""
        arr_name = "_plus" if group > 0 else "_minus"
        while True:
            arr = getattr(self, arr_name)
            have = int(arr[self._n - 1]) if self._n else 0
            if have >= index:
                return int(np.searchsorted(arr[: self._n], index, side="left")) + 1
            if self.provider is None:
                raise TruncationError(
                    f"group {group:+d} has only {have} members in the stored "
                    f"{self._n} levels; index {index} requested"
                )
            deficit = index - have
            if have > 0:
                # extrapolate from the observed group frequency
                step = max(int(math.ceil(deficit * self._n / have * 1.05)) + 64, self._n // 4)
            else:
                step = max(self._n, 1024)
            self.extend(max(step, 1))


def group_index(k: int, sigma: IndicatorSequence) -> tuple[int, int]:
    """Group label and within-group index of level ``k``.

    The index is ``(k + sigma(k) * S(k)) / 2``: the number of same-group
    levels at or below ``k``.
    """
    k = _check_level(k)
    g = sigma.sigma(k)
    idx = (k + g * sigma.prefix_sum(k)) // 2
    return g, idx


def position_of(group: int, index: int, sigma: IndicatorSequence) -> int:
    """Inverse of :func:`group_index`: the level holding ``(group, index)``."""
    if group not in (1, -1):
        raise ValueError(f"group must be +1 or -1, got {group!r}")
    index = _check_level(index, "index")
    return sigma.find(group, index)


@dataclass
class AdiabaticLevelMap:
    """Level renumbering over one period.

    ``sigma1`` labels levels at the separation moment, ``sigma2`` at the
    reconnection moment.
    """

    sigma1: IndicatorSequence
    sigma2: IndicatorSequence

    def forward(self, k: int) -> int:
        return map_forward(k, self)

    def backward(self, kbar: int) -> int:
        return map_backward(kbar, self)


def map_forward(k: int, lmap: AdiabaticLevelMap) -> int:
    g, idx = group_index(k, lmap.sigma1)
    return position_of(g, idx, lmap.sigma2)


def map_backward(kbar: int, lmap: AdiabaticLevelMap) -> int:
    g, idx = group_index(kbar, lmap.sigma2)
    return position_of(g, idx, lmap.sigma1)


def map_table(lmap: AdiabaticLevelMap, k_max: int) -> list[tuple[int, int, int, int, int]]:
    """Rows ``(k, sigma1(k), S1(k), kbar, sigma2(kbar))`` for k = 1..k_max.

    Stops early, without error, at the first ``k`` whose image cannot be
    resolved from the available sequences.
    """
    rows = []
    for k in range(1, k_max + 1):
        try:
            kbar = map_forward(k, lmap)
        except TruncationError:
            break
        rows.append((k, lmap.sigma1.sigma(k), lmap.sigma1.prefix_sum(k), kbar, lmap.sigma2.sigma(kbar)))
    return rows


class Outcome(str, enum.Enum):
    LOOP = "loop"
    ESCAPED = "escaped"
    UNDETERMINED = "undetermined"


@dataclass
class LevelTrajectory:
    """Level numbers k_0, k_1, ... recorded at the start of each period.

    ``steps[0]`` is the starting level.  For ``LOOP`` the ``period`` field
    holds the loop length, for ``ESCAPED`` the ``threshold`` that was
    exceeded.  ``diagnostic`` explains an ``UNDETERMINED`` result that was
    caused by truncation rather than the step limit.
    """

    start: int
    steps: list[int]
    outcome: Outcome
    period: Optional[int] = None
    threshold: Optional[int] = None
    step_limit: Optional[int] = None
    diagnostic: str = ""
    backward: bool = False

    def log_levels(self) -> np.ndarray:
        return log_series(self)


def iterate(
    k0: int,
    lmap: AdiabaticLevelMap,
    step_limit: int,
    escape_threshold: int,
    backward: bool = False,
) -> LevelTrajectory:
    """Iterate the level map from ``k0`` and classify the orbit.

    Every visited value is remembered, so a loop is reported even if it is
    entered after a transient.
    """
    k0 = _check_level(k0, "k0")
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    step = map_backward if backward else map_forward
    steps = [k0]
    seen = {k0: 0}
    if k0 > escape_threshold:
        return LevelTrajectory(k0, steps, Outcome.ESCAPED, threshold=escape_threshold,
                               step_limit=step_limit, backward=backward)
    k = k0
    for s in range(1, step_limit + 1):
        try:
            k = step(k, lmap)
        except TruncationError as exc:
            return LevelTrajectory(k0, steps, Outcome.UNDETERMINED, step_limit=step_limit,
                                   diagnostic=f"truncated after {s - 1} steps: {exc}",
                                   backward=backward)
        steps.append(k)
        if k in seen:
            return LevelTrajectory(k0, steps, Outcome.LOOP, period=s - seen[k],
                                   step_limit=step_limit, backward=backward)
        if k > escape_threshold:
            return LevelTrajectory(k0, steps, Outcome.ESCAPED, threshold=escape_threshold,
                                   step_limit=step_limit, backward=backward)
        seen[k] = s
    return LevelTrajectory(k0, steps, Outcome.UNDETERMINED, step_limit=step_limit,
                           backward=backward)


def _steps(traj) -> list[int]:
    return list(traj.steps) if hasattr(traj, "steps") else list(traj)


def growth_rate(traj) -> float:
    """Endpoint slope (ln k_S - ln k_0) / S of a trajectory or level list."""
    steps = _steps(traj)
    S = len(steps) - 1
    if S < 1:
        raise ValueError("growth rate needs at least two recorded levels")
    if min(steps) < 1:
        raise ValueError("level numbers must be >= 1")
    return (math.log(steps[-1]) - math.log(steps[0])) / S


def log_series(traj) -> np.ndarray:
    """ln k_s for every recorded step, for offline fitting."""
    return np.log(np.asarray(_steps(traj), dtype=float))


def entropy(k: int) -> float:
    """Entropy of the k-th energy eigenstate, ln k."""
    return math.log(_check_level(k))


def returns(traj) -> int:
    """Number of steps that revisit an earlier level of the same trajectory."""
    seen: set[int] = set()
    count = 0
    for k in _steps(traj):
        if k in seen:
            count += 1
        seen.add(k)
    return count
