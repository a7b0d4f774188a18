"""Integer swap schedules: how many swaps to attempt for each user pair.

A schedule for count vector ``a`` is feasible when every user j takes part
in at most ``a[j]`` swaps. Each swap consumes one link-level pair on both of
its links. Schedules are stored as rows over the pairs (i, j), i < j, in
lexicographic order.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

DEFAULT_CAP = 10**6


class ScheduleCapError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def user_pairs(k: int) -> tuple[tuple[int, int], ...]:
    return tuple(itertools.combinations(range(k), 2))


def pair_index(k: int) -> dict[tuple[int, int], int]:
    return {pr: n for n, pr in enumerate(user_pairs(k))}


def usage(schedule, k: int) -> np.ndarray:
    """Pairs consumed per user by a schedule row."""
    used = np.zeros(k, dtype=int)
    for (i, j), s in zip(user_pairs(k), schedule):
        used[i] += s
        used[j] += s
    return used


def is_feasible(schedule, a) -> bool:
    return bool(np.all(usage(schedule, len(a)) <= np.asarray(a))) and min(schedule, default=0) >= 0


def is_maximal(schedule, a) -> bool:
    """No pair can take one more swap without breaking feasibility."""
    left = np.asarray(a) - usage(schedule, len(a))
    return all(left[i] == 0 or left[j] == 0 for i, j in user_pairs(len(a)))


def _enumerate(a: tuple[int, ...], maximal_only: bool, cap: int) -> list[tuple[int, ...]]:
    k = len(a)
    pairs = user_pairs(k)
    out: list[tuple[int, ...]] = []
    left = list(a)
    current = [0] * len(pairs)

    def rec(n: int):
        if n == len(pairs):
            if maximal_only and any(left[i] and left[j] for i, j in pairs):
                return
            out.append(tuple(current))
            if len(out) > cap:
                raise ScheduleCapError(f"more than {cap} schedules for a={a}")
            return
        i, j = pairs[n]
        for s in range(min(left[i], left[j]) + 1):
            current[n] = s
            left[i] -= s
            left[j] -= s
            rec(n + 1)
            left[i] += s
            left[j] += s
        current[n] = 0

    rec(0)
    return out


@lru_cache(maxsize=4096)
def _cached(a: tuple[int, ...], maximal_only: bool, cap: int) -> np.ndarray:
    rows = _enumerate(a, maximal_only, cap)
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), len(user_pairs(len(a))))
    arr.flags.writeable = False
    return arr


def enumerate_schedules(a, maximal_only: bool = True, cap: int = DEFAULT_CAP) -> np.ndarray:
    """All feasible (or all Pareto-maximal) schedules for ``a``, lexicographically sorted.

    Returns an (n_schedules, n_pairs) integer array. The zero schedule is the
    only result when no pair has two users with pairs left.
    """
    return _cached(tuple(int(v) for v in a), bool(maximal_only), int(cap))


def brute_force_schedules(a) -> np.ndarray:
    """Every feasible schedule by filtering the full box; used as an oracle."""
    k = len(a)
    pairs = user_pairs(k)
    ranges = [range(min(a[i], a[j]) + 1) for i, j in pairs]
    rows = [s for s in itertools.product(*ranges) if is_feasible(s, a)]
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(pairs))
