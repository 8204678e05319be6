import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelcross.errors import LevelOverflowError, TruncationError
from levelcross.levelmap import (
    AdiabaticLevelMap,
    IndicatorSequence,
    Outcome,
    entropy,
    group_index,
    growth_rate,
    iterate,
    log_series,
    map_backward,
    map_forward,
    map_table,
    position_of,
    returns,
)

signs = st.lists(st.sampled_from([1, -1]), min_size=1, max_size=300)


def test_prefix_sums_and_group_index():
    s = IndicatorSequence([1, -1, -1, 1, 1])
    assert list(s.prefix_sums) == [1, 0, -1, 0, 1]
    assert [group_index(k, s) for k in range(1, 6)] == [(1, 1), (-1, 1), (-1, 2), (1, 2), (1, 3)]
    assert position_of(-1, 2, s) == 3
    assert position_of(1, 3, s) == 5


def test_values_are_read_only():
    s = IndicatorSequence([1, -1])
    with pytest.raises(ValueError):
        s.values[0] = -1


def test_rejects_bad_values_and_levels():
    with pytest.raises(ValueError):
        IndicatorSequence([1, 0])
    s = IndicatorSequence([1])
    with pytest.raises(ValueError):
        s.sigma(0)
    with pytest.raises(TypeError):
        s.sigma(1.5)
    with pytest.raises(ValueError):
        position_of(2, 1, s)


def test_truncation_without_provider():
    s = IndicatorSequence([1, -1])
    with pytest.raises(TruncationError):
        s.sigma(3)
    with pytest.raises(TruncationError):
        position_of(1, 2, s)


def test_provider_extension_and_max_length():
    calls = []

    def provider(start, count):
        calls.append((start, count))
        return [1 if (start + i + 1) % 3 else -1 for i in range(count)]

    s = IndicatorSequence(provider=provider, max_length=1000)
    assert s.sigma(3) == -1
    assert s.sigma(500) == 1 and s.sigma(501) == -1
    assert all(c > 0 for _, c in calls)
    with pytest.raises(LevelOverflowError):
        s.sigma(1001)
    with pytest.raises(LevelOverflowError):
        s.sigma(2**70)


@given(signs)
def test_group_index_is_a_bijection(vals):
    s = IndicatorSequence(vals)
    labels = [group_index(k, s) for k in range(1, len(vals) + 1)]
    assert len(set(labels)) == len(labels)
    for k, (g, i) in enumerate(labels, start=1):
        assert position_of(g, i, s) == k
        assert i == sum(1 for v in vals[:k] if v == g)


@given(st.integers(1, 150), st.integers(1, 150), st.randoms(use_true_random=False))
def test_map_properties_on_random_sequences(n_plus, n_minus, rnd):
    v1 = [1] * n_plus + [-1] * n_minus
    v2 = list(v1)
    rnd.shuffle(v1)
    rnd.shuffle(v2)
    lmap = AdiabaticLevelMap(IndicatorSequence(v1), IndicatorSequence(v2))
    n = len(v1)
    image = [map_forward(k, lmap) for k in range(1, n + 1)]
    assert sorted(image) == list(range(1, n + 1))
    for k, kb in enumerate(image, start=1):
        assert map_backward(kb, lmap) == k
        assert v2[kb - 1] == v1[k - 1]
    for g in (1, -1):
        ks = [k for k in range(1, n + 1) if v1[k - 1] == g]
        imgs = [image[k - 1] for k in ks]
        assert imgs == sorted(imgs)


def test_map_table_stops_at_truncation():
    lmap = AdiabaticLevelMap(IndicatorSequence([1, 1, -1]), IndicatorSequence([-1, 1]))
    rows = map_table(lmap, 3)
    assert rows == [(1, 1, 1, 2, 1)]


def test_iterate_detects_loop_after_transient():
    # sigma1 = sigma2 gives the identity map: every level is a fixed point
    s = IndicatorSequence([1, -1, 1, -1])
    traj = iterate(2, AdiabaticLevelMap(s, s), step_limit=10, escape_threshold=100)
    assert traj.outcome is Outcome.LOOP and traj.period == 1
    assert traj.steps == [2, 2]


def test_iterate_escape_and_undetermined():
    lmap = AdiabaticLevelMap(IndicatorSequence([1, -1, -1, -1]), IndicatorSequence([-1, -1, -1, 1]))
    traj = iterate(1, lmap, step_limit=5, escape_threshold=3)
    assert traj.outcome is Outcome.ESCAPED and traj.steps == [1, 4]
    assert iterate(1, lmap, step_limit=5, escape_threshold=10).outcome is Outcome.LOOP

    short = AdiabaticLevelMap(IndicatorSequence([1, 1]), IndicatorSequence([-1, 1]))
    traj = iterate(2, short, step_limit=5, escape_threshold=10)
    assert traj.outcome is Outcome.UNDETERMINED
    assert "truncated" in traj.diagnostic
    traj = iterate(1, short, step_limit=1, escape_threshold=10)
    assert traj.outcome is Outcome.UNDETERMINED and traj.diagnostic == ""
    assert traj.steps == [1, 2]


def test_backward_iteration_inverts_forward():
    s1 = IndicatorSequence([1, -1, 1, 1, -1, -1])
    s2 = IndicatorSequence([-1, 1, -1, 1, -1, 1])
    lmap = AdiabaticLevelMap(s1, s2)
    fwd = iterate(3, lmap, 3, 100)
    back = iterate(fwd.steps[-1], lmap, 3, 100, backward=True)
    assert back.steps == fwd.steps[::-1]


def test_diagnostics():
    assert growth_rate([1, math.e, math.e**2]) == pytest.approx(1.0)
    assert entropy(1) == 0.0
    assert np.allclose(log_series([1, 2]), [0.0, math.log(2)])
    assert returns([1, 2, 1, 2, 3]) == 2
    with pytest.raises(ValueError):
        growth_rate([5])


@settings(max_examples=30)
@given(st.integers(1, 2**62))
def test_level_range_accepts_64_bit(k):
    s = IndicatorSequence([1])
    if k == 1:
        assert s.sigma(k) == 1
    else:
        with pytest.raises((TruncationError, LevelOverflowError)):
            s.sigma(k)
