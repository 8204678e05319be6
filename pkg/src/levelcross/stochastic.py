"""Random indicator sequences and the logarithmic energy gain per period.

Every random draw comes from a Philox stream keyed by
``(seed, stream_id, which, trial)``, so results do not depend on the order in
which trials are evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, LevelOverflowError, TruncationError
from .levelmap import (
    DEFAULT_MAX_LENGTH,
    MAX_LEVEL,
    AdiabaticLevelMap,
    IndicatorSequence,
    LevelTrajectory,
    Outcome,
    map_forward,
    returns,
)

_U32 = 2**32


@dataclass(frozen=True)
class BernoulliParams:
    beta: float
    gamma: float
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("beta", "gamma"):
            p = getattr(self, name)
            if not 0.0 < p < 1.0:
                raise DomainError(f"{name} must lie strictly between 0 and 1, got {p}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.stream_id < 0:
            raise DomainError("stream_id must be non-negative")


def make_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


class _BernoulliProvider:
    """i.i.d. +/-1 values, +1 with probability ``p``.

    Each value consumes one 32-bit draw, so the produced sequence does not
    depend on how the requests are chunked.
    """

    def __init__(self, p: float, rng: np.random.Generator):
        self.threshold = int(round(p * _U32))
        self.rng = rng

    def __call__(self, start: int, count: int) -> np.ndarray:
        u = self.rng.integers(0, _U32, size=count, dtype=np.uint32)
        return np.where(u < self.threshold, 1, -1).astype(np.int8) if self.threshold < _U32 \
            else np.ones(count, dtype=np.int8)


class BlockBernoulliSequence:
    """i.i.d. +/-1 sequence that only materialises the blocks it is asked about.

    The number of +1 entries in each block of ``block`` levels is drawn from
    Binomial(block, p); a block's arrangement is a uniformly random placement
    of that many +1 entries, drawn from its own stream on first use.  The
    joint law equals that of independent per-level draws, but a query at
    level k costs O(k / block) instead of O(k).  Supports the same queries
    as :class:`IndicatorSequence` used by the level map.
    """

    def __init__(self, p: float, seed: int, key: tuple, block: int = 1024,
                 max_length: int = 2**34):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"probability must lie in [0, 1], got {p}")
        self.p = p
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.block = int(block)
        self.max_length = int(max_length)
        self._count_rng = make_rng(self.seed, *self.key, 0)
        self._plus_cum = np.zeros(1, dtype=np.int64)
        self._blocks: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return (self._plus_cum.size - 1) * self.block

    def _grow(self, nblocks: int) -> None:
        have = self._plus_cum.size - 1
        if nblocks <= have:
            return
        if nblocks * self.block > self.max_length:
            raise LevelOverflowError(
                f"sequence would exceed max_length={self.max_length}")
        c = self._count_rng.binomial(self.block, self.p, size=nblocks - have)
        self._plus_cum = np.concatenate([self._plus_cum, self._plus_cum[-1] + np.cumsum(c)])

    def ensure(self, k: int) -> None:
        nb = -(-k // self.block)
        have = self._plus_cum.size - 1
        if nb > have:
            self._grow(min(max(nb, 2 * have), max(nb, self.max_length // self.block)))

    def _block_values(self, b: int) -> np.ndarray:
        arr = self._blocks.get(b)
        if arr is None:
            c = int(self._plus_cum[b + 1] - self._plus_cum[b])
            rng = make_rng(self.seed, *self.key, 1, b)
            arr = -np.ones(self.block, dtype=np.int8)
            arr[rng.permutation(self.block)[:c]] = 1
            self._blocks[b] = arr
        return arr

    def _plus_upto(self, k: int) -> int:
        b, r = divmod(k, self.block)
        base = int(self._plus_cum[b])
        if r:
            base += int(np.count_nonzero(self._block_values(b)[:r] > 0))
        return base

    def sigma(self, k: int) -> int:
        self.ensure(k)
        b, r = divmod(k - 1, self.block)
        return int(self._block_values(b)[r])

    def count(self, group: int, k: int) -> int:
        if k == 0:
            return 0
        self.ensure(k)
        plus = self._plus_upto(k)
        return plus if group > 0 else k - plus

    def prefix_sum(self, k: int) -> int:
        if k == 0:
            return 0
        self.ensure(k)
        return 2 * self._plus_upto(k) - k

    def find(self, group: int, index: int) -> int:
        while True:
            nb = self._plus_cum.size - 1
            cum = self._plus_cum if group > 0 else np.arange(nb + 1) * self.block - self._plus_cum
            if cum[-1] >= index:
                b = int(np.searchsorted(cum, index, side="left")) - 1
                need = index - int(cum[b])
                vals = self._block_values(b) == (1 if group > 0 else -1)
                r = int(np.searchsorted(np.cumsum(vals), need, side="left"))
                return b * self.block + r + 1
            have = int(cum[-1])
            if have > 0:
                est = int(math.ceil((index - have) * nb / have * 1.05)) + 1
            else:
                est = max(nb, 1)
            if nb >= self.max_length // self.block:
                raise LevelOverflowError(
                    f"group {group:+d} index {index} not reached within max_length={self.max_length}")
            self._grow(min(nb + max(est, nb // 4, 1), self.max_length // self.block))


def bernoulli_sequence(p: float, seed: int = 0, *key: int,
                       max_length: int = DEFAULT_MAX_LENGTH) -> IndicatorSequence:
    """Lazily generated i.i.d. sequence with P(+1) = p, p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    return IndicatorSequence(provider=_BernoulliProvider(p, make_rng(seed, *key)),
                             max_length=max_length)


def bernoulli_indicators(params: BernoulliParams, which: int, trial: int = 0,
                         max_length: int = DEFAULT_MAX_LENGTH) -> IndicatorSequence:
    """sigma_1 (which=1, P(+1)=beta) or sigma_2 (which=2, P(+1)=gamma)."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    p = params.beta if which == 1 else params.gamma
    return bernoulli_sequence(p, params.seed, params.stream_id, which, trial,
                              max_length=max_length)


def bernoulli_map(params: BernoulliParams, trial: int = 0,
                  max_length: int = DEFAULT_MAX_LENGTH, blocked: bool = False) -> AdiabaticLevelMap:
    """A (sigma_1, sigma_2) pair for one trial.

    ``blocked`` uses :class:`BlockBernoulliSequence`, which has the same law
    but a different stream layout than the fully materialised sequences.
    """
    if blocked:
        return AdiabaticLevelMap(
            BlockBernoulliSequence(params.beta, params.seed, (params.stream_id, 1, trial), max_length=max_length),
            BlockBernoulliSequence(params.gamma, params.seed, (params.stream_id, 2, trial), max_length=max_length),
        )
    return AdiabaticLevelMap(bernoulli_indicators(params, 1, trial, max_length),
                             bernoulli_indicators(params, 2, trial, max_length))


def kl_rho(beta: float, gamma: float) -> float:
    """Expected gain of ln k per period: the Bernoulli KL divergence D(beta || gamma)."""
    for name, p in (("beta", beta), ("gamma", gamma)):
        if not 0.0 < p < 1.0:
            raise DomainError(f"{name} must lie strictly between 0 and 1, got {p}")
    return beta * math.log(beta / gamma) + (1 - beta) * math.log((1 - beta) / (1 - gamma))


@dataclass
class GainEstimate:
    mean: float
    stderr: float
    trials: int
    reference: float
    k_start: int

    @property
    def bias_allowance(self) -> float:
        return 2.0 / math.sqrt(self.k_start)

    def consistent(self, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - self.reference) <= n_sigma * self.stderr + self.bias_allowance


def mc_gain(params: BernoulliParams, k_start: int, trials: int, retries: int = 3,
            blocked: bool = True) -> GainEstimate:
    """Monte Carlo mean and standard error of ln kbar - ln k over fresh sequence pairs.

    Each trial draws its own (sigma_1, sigma_2) and applies one map step from
    ``k_start``.  A trial whose image does not fit in the sequence length
    limit is retried with a four times larger limit, at most ``retries``
    times.  ``blocked=False`` materialises every level (slow, same law).
    """
    if k_start < 1 or trials < 1:
        raise ValueError("k_start and trials must be >= 1")
    gains = np.empty(trials)
    for t in range(trials):
        limit = max(DEFAULT_MAX_LENGTH, 8 * k_start)
        for attempt in range(retries + 1):
            try:
                kbar = map_forward(k_start, bernoulli_map(params, t, limit, blocked))
                break
            except TruncationError:
                if attempt == retries:
                    raise
                limit *= 4
        gains[t] = math.log(kbar) - math.log(k_start)
    stderr = float(gains.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return GainEstimate(float(gains.mean()), stderr, trials, kl_rho(params.beta, params.gamma), k_start)


def sample_period(k: int, beta: float, gamma: float, rng: np.random.Generator) -> int:
    """One map step on a freshly drawn i.i.d. pair, sampled without materialising it.

    For i.i.d. sequences the within-group index of ``k`` is one plus a
    binomial count over the k-1 lower levels, and the position of the
    index-th group member in sigma_2 is that index plus a negative binomial
    number of other-group levels.  This has the same law as
    ``map_forward`` on materialised sequences, at O(1) cost.
    """
    g_plus = rng.random() < beta
    p1 = beta if g_plus else 1.0 - beta
    p2 = gamma if g_plus else 1.0 - gamma
    idx = 1 + int(rng.binomial(k - 1, p1)) if k > 1 else 1
    if idx / p2 > MAX_LEVEL / 2:
        raise LevelOverflowError(f"image of level {k} would leave the 64-bit range")
    kbar = idx + int(rng.negative_binomial(idx, p2))
    if kbar > MAX_LEVEL or kbar < 1:
        raise LevelOverflowError(f"level {kbar} left the 64-bit range")
    return kbar


@dataclass
class LLNResult:
    trajectory: LevelTrajectory
    log_levels: np.ndarray
    slope: float
    truncated: bool = False
    note: str = ""
    reference: float = field(default=float("nan"))


def lln_trajectory(params: BernoulliParams, k0: int, periods: int, redraw: bool = True,
                   shared: bool = False, max_length: int = 2**26) -> LLNResult:
    """Level numbers at the start of each period for one realisation.

    With ``redraw`` (the default) a fresh sequence pair is drawn every
    period; otherwise one fixed pair is used throughout.  ``shared`` draws
    sigma_1 and sigma_2 from the same stream, which requires beta == gamma
    and gives the identity map.  If a level leaves the representable range
    the trajectory stops there and ``truncated`` is set.
    """
    if k0 < 1 or periods < 0:
        raise ValueError("k0 must be >= 1 and periods >= 0")
    if shared and params.beta != params.gamma:
        raise DomainError("shared streams need beta == gamma")
    steps = [int(k0)]
    truncated = False
    note = ""
    if redraw and not shared:
        rng = make_rng(params.seed, params.stream_id, 3)
        step = lambda k: sample_period(k, params.beta, params.gamma, rng)  # noqa: E731
    else:
        if shared:
            s1 = BlockBernoulliSequence(params.beta, params.seed, (params.stream_id, 0, 0), max_length=max_length)
            lmap = AdiabaticLevelMap(s1, s1)
        else:
            lmap = bernoulli_map(params, 0, max_length, blocked=True)
        step = lambda k: map_forward(k, lmap)  # noqa: E731
    k = int(k0)
    for s in range(periods):
        try:
            k = step(k)
        except (LevelOverflowError, TruncationError) as exc:
            truncated = True
            note = f"stopped after {s} periods: {exc}"
            break
        steps.append(k)
    outcome = Outcome.UNDETERMINED
    traj = LevelTrajectory(int(k0), steps, outcome, step_limit=periods, diagnostic=note)
    logs = np.log(np.asarray(steps, dtype=float))
    slope = float((logs[-1] - logs[0]) / (len(steps) - 1)) if len(steps) > 1 else float("nan")
    return LLNResult(traj, logs, slope, truncated, note, kl_rho(params.beta, params.gamma))


def lln_slopes(beta: float, gamma: float, seeds, k0: int, periods: int,
               redraw: bool = True) -> list[LLNResult]:
    return [lln_trajectory(BernoulliParams(beta, gamma, seed=int(s)), k0, periods, redraw)
            for s in seeds]


def return_histogram(results) -> dict[int, int]:
    """How many trajectories revisit an earlier level r times, keyed by r."""
    hist: dict[int, int] = {}
    for r in results:
        n = returns(r.trajectory)
        hist[n] = hist.get(n, 0) + 1
    return dict(sorted(hist.items()))
