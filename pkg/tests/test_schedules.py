import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qswitch.schedules import (
    ScheduleCapError,
    brute_force_schedules,
    enumerate_schedules,
    is_feasible,
    is_maximal,
    usage,
    user_pairs,
)

counts = st.integers(2, 4).flatmap(lambda k: st.lists(st.integers(0, 4), min_size=k, max_size=k))


def _rows(arr):
    return {tuple(r) for r in arr.tolist()}


def test_examples():
    assert enumerate_schedules((1, 1, 1)).tolist() == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    assert enumerate_schedules((3, 2)).tolist() == [[2]]
    assert enumerate_schedules((1, 1, 0)).tolist() == [[1, 0, 0]]
    assert enumerate_schedules((0, 0, 0)).tolist() == [[0, 0, 0]]
    assert enumerate_schedules((5, 0, 0)).tolist() == [[0, 0, 0]]
    assert len(enumerate_schedules((1, 1, 1), maximal_only=False)) == 4


def test_user_pairs_order():
    assert user_pairs(4) == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
    assert usage((1, 2, 0), 3).tolist() == [3, 1, 2]


@settings(max_examples=80)
@given(counts)
def test_full_enumeration_matches_brute_force(a):
    assert _rows(enumerate_schedules(a, maximal_only=False)) == _rows(brute_force_schedules(a))


@settings(max_examples=80)
@given(counts)
def test_maximal_matches_filtered_brute_force(a):
    brute = {s for s in _rows(brute_force_schedules(a)) if is_maximal(s, a)}
    got = enumerate_schedules(a)
    assert _rows(got) == brute
    assert got.tolist() == sorted(got.tolist())
    assert all(is_feasible(s, a) for s in got.tolist())


@settings(max_examples=50)
@given(counts)
def test_every_schedule_below_a_maximal_one(a):
    maxi = enumerate_schedules(a)
    for s in brute_force_schedules(a):
        assert np.any(np.all(maxi >= s, axis=1))


def test_cap():
    with pytest.raises(ScheduleCapError):
        enumerate_schedules((4, 4, 4, 4), maximal_only=False, cap=10)


def test_read_only():
    arr = enumerate_schedules((2, 2, 2))
    with pytest.raises(ValueError):
        arr[0, 0] = 9
