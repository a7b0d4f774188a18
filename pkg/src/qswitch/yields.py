"""Conditional yield of nested purification: P(Y | X) and E[Y | X].

Symmetric (recurrence) protocols are handled by propagating the count
distribution through each round of group-and-purify. Entanglement pumping
is a renewal process: the number of pairs consumed per high-fidelity output
is the inter-occurrence time, and the yield is the renewal counting process
evaluated at the number of input pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from qswitch.bell import (
    BellDiagonalState,
    ProtocolId,
    pump_round,
    round_output_fidelity,
    round_success_prob,
)

DEFAULT_MAX_ROUNDS = 32
ROW_TOL = 1e-9


class TargetUnreachableError(ValueError):
    pass


@dataclass(frozen=True)
class RoundInfo:
    success_prob: float
    state: BellDiagonalState

    @property
    def fidelity(self) -> float:
        return self.state.fidelity


@dataclass(frozen=True)
class PurificationSpec:
    proto: ProtocolId
    input_state: BellDiagonalState
    f_target: float
    per_round: tuple[RoundInfo, ...] = ()
    kappa: int = 2

    @property
    def rounds(self) -> int:
        return len(self.per_round)

    @property
    def success_probs(self) -> list[float]:
        return [r.success_prob for r in self.per_round]

    @property
    def output_fidelity(self) -> float:
        if not self.per_round:
            return self.input_state.fidelity
        return self.per_round[-1].fidelity


def identity_spec(state: BellDiagonalState, proto=ProtocolId.DEJMPS_BELL_DIAGONAL):
    """No purification at all: every input pair is delivered."""
    return PurificationSpec(proto, state, f_target=state.fidelity)


def plan_rounds(
    proto: ProtocolId,
    input_state: BellDiagonalState,
    f_target: float,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> PurificationSpec:
    """Find the smallest number of rounds whose output reaches ``f_target``."""
    if not 0.5 < f_target < 1.0:
        raise ValueError(f"target fidelity must be in (0.5, 1), got {f_target}")
    if input_state.fidelity <= 0.5:
        raise ValueError(f"input fidelity must exceed 0.5, got {input_state.fidelity}")

    rounds: list[RoundInfo] = []
    state = input_state
    while state.fidelity < f_target:
        if len(rounds) >= max_rounds:
            raise TargetUnreachableError(
                f"{proto.value}: fidelity {state.fidelity:.6f} after {max_rounds} rounds "
                f"is still below target {f_target}"
            )
        if proto is ProtocolId.PUMPING:
            r, nxt = pump_round(state, input_state)
        else:
            r = round_success_prob(proto, state)
            nxt = round_output_fidelity(proto, state)
        if nxt.fidelity <= state.fidelity + 1e-15:
            # pumping saturates at a fixed point below 1
            raise TargetUnreachableError(
                f"{proto.value}: fidelity stalls at {state.fidelity:.6f} < {f_target}"
            )
        rounds.append(RoundInfo(r, nxt))
        state = nxt
    return PurificationSpec(proto, input_state, f_target, tuple(rounds))


@dataclass(frozen=True)
class YieldModel:
    """Row x of ``pmf`` is P(Y = . | X = x); ``mean[x]`` is E[Y | X = x]."""

    pmf: np.ndarray
    mean: np.ndarray = field(default=None)

    def __post_init__(self):
        pmf = np.array(self.pmf, dtype=float)
        if pmf.ndim != 2 or pmf.shape[0] != pmf.shape[1]:
            raise ValueError("pmf must be a square (x_max+1, x_max+1) table")
        sums = pmf.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"yield row x={bad} sums to {sums[bad]!r}")
        mean = pmf @ np.arange(pmf.shape[1]) if self.mean is None else np.array(self.mean, float)
        pmf.flags.writeable = False
        mean.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "mean", mean)

    @property
    def x_max(self) -> int:
        return self.pmf.shape[0] - 1

    @classmethod
    def identity(cls, x_max: int) -> "YieldModel":
        return cls(np.eye(x_max + 1))


def _round_step(dist: np.ndarray, r: float, kappa: int) -> np.ndarray:
    """Push a count distribution through one group-and-purify round."""
    out = np.zeros_like(dist)
    for z in np.flatnonzero(dist):
        groups = z // kappa
        ys = np.arange(groups + 1)
        out[: groups + 1] += dist[z] * binom.pmf(ys, groups, r)
    return out


def symmetric_yield(spec: PurificationSpec, x_max: int) -> YieldModel:
    """Yield table of a recurrence protocol, iterating over each round's actual support."""
    if x_max < 0:
        raise ValueError("x_max must be nonnegative")
    pmf = np.zeros((x_max + 1, x_max + 1))
    for x in range(x_max + 1):
        dist = np.zeros(x_max + 1)
        dist[x] = 1.0
        for r in spec.success_probs:
            dist = _round_step(dist, r, spec.kappa)
        pmf[x] = dist
    return YieldModel(pmf)


@dataclass(frozen=True)
class RenewalModel:
    """``inter_pmf[i]`` = P(i pairs are consumed to produce one output)."""

    inter_pmf: np.ndarray
    rounds: int

    @property
    def x_max(self) -> int:
        return len(self.inter_pmf) - 1

    def infeasible(self, i: int) -> bool:
        return self.inter_pmf[i] == 0.0


def pumping_inter_occurrence(spec: PurificationSpec, x_max: int) -> RenewalModel:
    """Inter-occurrence law from an absorbing chain over the primary's round.

    Chain state is the number of successful pumps the current primary has
    received, or ``None`` when no primary is held. Consuming one pair either
    starts a primary, pumps it one level up, or (on failure) discards it.
    """
    L = spec.rounds
    if L < 1:
        raise ValueError("pumping with zero rounds has no renewal structure")
    r = spec.success_probs
    # level[l] = P(holding a primary pumped l times, no output yet)
    idle = 1.0
    level = np.zeros(L)
    inter = np.zeros(x_max + 1)
    for i in range(1, x_max + 1):
        new_level = np.zeros(L)
        new_level[0] = idle
        failed = 0.0
        for lvl in range(L):
            if level[lvl] == 0.0:
                continue
            succ = level[lvl] * r[lvl]
            failed += level[lvl] - succ
            if lvl + 1 == L:
                inter[i] = succ
            else:
                new_level[lvl + 1] += succ
        idle = failed
        level = new_level
    return RenewalModel(inter, L)


def pumping_inter_occurrence_closed_form(r: float, x_max: int) -> np.ndarray:
    """Single-round (2:1) renewal recursion where odd counts are infeasible."""
    inter = np.zeros(x_max + 1)
    for i in range(2, x_max + 1):
        if i % 2:
            continue
        inter[i] = r * (1.0 - inter[1 : i - 1].sum())
    return inter


def renewal_times(renewal: RenewalModel, n_events: int) -> np.ndarray:
    """Row k holds the law of the k-th renewal time, truncated to x_max."""
    n = renewal.x_max + 1
    s = np.zeros((n_events + 1, n))
    s[0, 0] = 1.0
    for k in range(1, n_events + 1):
        s[k] = np.convolve(renewal.inter_pmf, s[k - 1])[:n]
    return s


def pumping_expected_yield(renewal: RenewalModel) -> np.ndarray:
    """E[Y | X = x] from the renewal equation."""
    n = renewal.x_max + 1
    px = renewal.inter_pmf
    mean = np.zeros(n)
    for x in range(renewal.rounds + 1, n):
        i = np.arange(1, x + 1)
        mean[x] = np.sum((1.0 + mean[x - i]) * px[i])
    return mean


def pumping_yield(spec: PurificationSpec, x_max: int) -> YieldModel:
    """Yield table of entanglement pumping; P(Y=y|x) = P(S_y <= x) - P(S_{y+1} <= x)."""
    if spec.rounds == 0:
        return YieldModel.identity(x_max)
    renewal = pumping_inter_occurrence(spec, x_max)
    # every output costs at least L+1 pairs
    n_events = x_max // (spec.rounds + 1) + 1
    cdf = np.cumsum(renewal_times(renewal, n_events + 1), axis=1)
    pmf = np.zeros((x_max + 1, x_max + 1))
    top = min(n_events, x_max)
    pmf[:, : top + 1] = (cdf[: top + 1] - cdf[1 : top + 2]).T
    return YieldModel(pmf, mean=pumping_expected_yield(renewal))


def yield_model(spec: PurificationSpec, x_max: int) -> YieldModel:
    if spec.proto is ProtocolId.PUMPING:
        return pumping_yield(spec, x_max)
    return symmetric_yield(spec, x_max)


def monte_carlo_yield_oracle(
    spec: PurificationSpec, x: int, samples: int, seed: int
) -> np.ndarray:
    """Empirical P(Y = . | X = x) from simulating the protocol pair by pair."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    probs = spec.success_probs
    if spec.proto is ProtocolId.PUMPING and probs:
        y = _mc_pumping(probs, x, samples, rng)
    else:
        y = _mc_symmetric(probs, spec.kappa, x, samples, rng)
    return np.bincount(y, minlength=x + 1)[: x + 1] / samples


def _mc_symmetric(probs, kappa, x, samples, rng):
    count = np.full(samples, x)
    for r in probs:
        groups = count // kappa
        g_max = int(groups.max()) if samples else 0
        if g_max == 0:
            return np.zeros(samples, dtype=int)
        # one Bernoulli draw per group; columns past a sample's group count are ignored
        ok = rng.random((samples, g_max)) < r
        ok &= np.arange(g_max)[None, :] < groups[:, None]
        count = ok.sum(axis=1)
    return count


def _mc_pumping(probs, x, samples, rng):
    L = len(probs)
    r = np.asarray(probs)
    level = np.full(samples, -1)  # -1: no primary held
    y = np.zeros(samples, dtype=int)
    for _ in range(x):
        u = rng.random(samples)
        fresh = level < 0
        holding = ~fresh
        ok = holding & (u < r[np.clip(level, 0, L - 1)])
        failed = holding & ~ok
        level = np.where(fresh, 0, level)
        level = np.where(ok, level + 1, level)
        done = level == L
        y += done
        level = np.where(done | failed, -1, level)
    return y
