"""Slotted simulation of the switch under max-weight scheduling.

Order of events inside slot n: requests arrive and join the queues, fresh
link pairs are generated, then PS purifies each link, schedules swaps on
the purified pairs and serves requests with the successful swaps, while SP
schedules swaps on raw pairs, swaps, and purifies the successful end-to-end
pairs of each user pair. Unused link pairs expire at the end of the slot.
"""

from __future__ import annotations

import json
from fractions import Fraction
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from qswitch.capacity import Architecture, ServiceFunction, SwitchModel
from qswitch.schedules import enumerate_schedules

MAX_USERS = 5
MAX_ALPHA = 10
SLOPE_EPS = 1e-3
QUEUE_FACTOR = 50.0


def draw_arrivals(rates: np.ndarray, rng: np.random.Generator, law: str = "poisson") -> np.ndarray:
    """Requests arriving this slot, one count per user pair."""
    rates = np.asarray(rates, dtype=float)
    if law == "poisson":
        return rng.poisson(rates)
    if law == "deterministic":
        if np.any(rates != np.round(rates)):
            raise ValueError("deterministic arrivals need integer rates")
        return rates.astype(np.int64)
    raise ValueError(f"unknown arrival law {law!r}")


def _argmax_schedule(schedules: np.ndarray, gain: np.ndarray, queues) -> np.ndarray:
    """Row maximizing gain @ queues; zero schedule when nothing has positive weight.

    Float scores only shortlist rows within 1e-9 of the best. The shortlist is
    rescored exactly, so ties in the stored service values stay ties and go
    to the lexicographically smallest schedule.
    """
    q = np.asarray(queues, dtype=np.int64)
    scores = gain @ q
    top = float(scores.max())
    if top <= 0.0:
        return np.zeros(schedules.shape[1], dtype=np.int64)
    near = np.flatnonzero(scores >= top - 1e-9 * max(1.0, top))
    if len(near) == 1:
        return schedules[near[0]]
    qs = [int(v) for v in q]
    exact = [sum((Fraction(float(g)) * qn for g, qn in zip(gain[r], qs)), Fraction(0)) for r in near]
    return schedules[near[int(np.argmax(exact))]] if max(exact) > 0 else np.zeros(schedules.shape[1], dtype=np.int64)


def mw_ps_schedule(counts, queues, q_pairs) -> np.ndarray:
    """argmax of sum pi_ij q_ij Q_ij over schedules feasible for ``counts``.

    Ties go to the lexicographically smallest schedule; when every schedule
    has zero weight the zero schedule is returned.
    """
    scheds = enumerate_schedules(counts)
    return _argmax_schedule(scheds, scheds * np.asarray(q_pairs, dtype=float), queues)


def mw_sp_schedule(counts, queues, service: Sequence[ServiceFunction]) -> np.ndarray:
    """argmax of sum H_ij(pi_ij) Q_ij; H is not concave, so every maximal schedule is scored."""
    scheds = enumerate_schedules(counts)
    gain = np.column_stack([fn.values[scheds[:, n]] for n, fn in enumerate(service)])
    return _argmax_schedule(scheds, gain, queues)


@dataclass
class SlotState:
    n: int
    queues: np.ndarray


@dataclass
class SlotTrace:
    n: int
    arrivals: list[int]
    links: list[int]
    purified: Optional[list[int]]
    scheduled: list[int]
    swaps: list[int]
    swap_successes: list[int]
    delivered: list[int]
    queues: list[int]

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))


class Simulator:
    def __init__(self, model: SwitchModel, rates, arrivals: str = "poisson"):
        if model.k > MAX_USERS or model.params.alpha_max > MAX_ALPHA:
            raise ValueError(
                f"max-weight search supports K <= {MAX_USERS}, alpha_max <= {MAX_ALPHA}"
            )
        self.model = model
        self.rates = np.asarray(rates, dtype=float)
        if self.rates.shape != (len(model.pairs),) or np.any(self.rates < 0):
            raise ValueError("need one nonnegative rate per user pair")
        self.arrivals = arrivals
        self.p = np.asarray(model.params.p)
        self.q_pairs = model.q_pairs
        self._cdf = np.cumsum(model.yields.pmf, axis=1)
        self._gain_cache: dict[tuple[int, ...], np.ndarray] = {}

    def initial_state(self) -> SlotState:
        return SlotState(0, np.zeros(len(self.model.pairs), dtype=np.int64))

    def _purify(self, counts: np.ndarray, rng) -> np.ndarray:
        """Sample the purified yield of each count by inverse CDF."""
        u = rng.random(len(counts))
        out = (u[:, None] >= self._cdf[counts]).sum(axis=1)
        return np.minimum(out, counts)

    def _schedule(self, counts: np.ndarray, queues: np.ndarray) -> np.ndarray:
        """Max-weight schedule; service_matrix is q * pi (PS, noise-less) or H(pi) (SP)."""
        key = tuple(int(v) for v in counts)
        scheds = enumerate_schedules(key)
        gain = self._gain_cache.get(key)
        if gain is None:
            gain = self._gain_cache[key] = self.model.service_matrix(scheds)
        return _argmax_schedule(scheds, gain, queues)

    def run_slot(self, state: SlotState, rng: np.random.Generator) -> tuple[SlotState, SlotTrace]:
        arch = self.model.arch
        arrivals = draw_arrivals(self.rates, rng, self.arrivals)
        queues = state.queues + arrivals
        links = rng.binomial(self.model.params.alpha_max, self.p)
        purified = None
        if arch is Architecture.PS:
            purified = self._purify(links, rng)
            available = purified
        else:
            available = links
        scheduled = self._schedule(available, queues)
        swaps = np.minimum(scheduled, queues)
        successes = rng.binomial(swaps, self.q_pairs)
        if arch is Architecture.SP:
            delivered = self._purify(successes, rng)
        else:
            delivered = successes
        queues = queues - delivered
        trace = SlotTrace(
            state.n,
            arrivals.tolist(),
            links.tolist(),
            None if purified is None else purified.tolist(),
            scheduled.tolist(),
            swaps.tolist(),
            successes.tolist(),
            delivered.tolist(),
            queues.tolist(),
        )
        return SlotState(state.n + 1, queues), trace

    def run(
        self, horizon: int, seed: int, on_trace: Optional[Callable[[SlotTrace], None]] = None
    ) -> "RunResult":
        rng = np.random.default_rng(seed)
        state = self.initial_state()
        n_pairs = len(self.model.pairs)
        total = np.zeros(horizon, dtype=np.int64)
        arrived = np.zeros(n_pairs, dtype=np.int64)
        served = np.zeros(n_pairs, dtype=np.int64)
        for n in range(horizon):
            state, tr = self.run_slot(state, rng)
            arrived += tr.arrivals
            served += tr.delivered
            total[n] = state.queues.sum()
            if on_trace is not None:
                on_trace(tr)
        return RunResult(seed, horizon, total, arrived, served, state.queues.copy())


@dataclass
class RunResult:
    seed: int
    horizon: int
    total_queue: np.ndarray
    arrived: np.ndarray
    served: np.ndarray
    final_queues: np.ndarray

    def tail(self) -> np.ndarray:
        return self.total_queue[self.horizon // 2 :]

    def tail_slope(self) -> float:
        y = self.tail().astype(float)
        x = np.arange(len(y), dtype=float)
        return float(np.polyfit(x, y, 1)[0]) if len(y) > 1 else 0.0

    def departure_rates(self) -> np.ndarray:
        return self.served / self.horizon


@dataclass
class StabilityReport:
    verdict: str
    slope: float
    bounded: bool
    mean_queue: float
    queue_limit: float
    slopes: list[float]
    tail_means: list[float]
    departure_rates: list[list[float]]
    horizon: int
    replicas: int
    seeds: list[int]
    rates: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def stability_verdict(median_slope: float, tail_mean: float, rates) -> str:
    """bounded / unbounded / inconclusive from the finite-horizon proxy."""
    limit = QUEUE_FACTOR * float(np.sum(rates))
    if median_slope < SLOPE_EPS and tail_mean <= limit:
        return "bounded"
    if median_slope > 10 * SLOPE_EPS:
        return "unbounded"
    return "inconclusive"


def estimate_stability(
    model: SwitchModel,
    rates,
    horizon: int = 100_000,
    replicas: int = 3,
    seed: int = 0,
    arrivals: str = "poisson",
    on_trace: Optional[Callable[[SlotTrace], None]] = None,
) -> StabilityReport:
    """Run independent replicas (seed + replica index) and apply the verdict rule."""
    if horizon < 10_000:
        raise ValueError("horizon must be at least 10^4 slots")
    if replicas < 3:
        raise ValueError("need at least 3 replicas")
    sim = Simulator(model, rates, arrivals)
    seeds = [seed + r for r in range(replicas)]
    runs = [sim.run(horizon, s, on_trace if r == 0 else None) for r, s in enumerate(seeds)]
    slopes = [r.tail_slope() for r in runs]
    tails = [float(r.tail().mean()) for r in runs]
    med_slope = float(np.median(slopes))
    med_tail = float(np.median(tails))
    verdict = stability_verdict(med_slope, med_tail, rates)
    return StabilityReport(
        verdict=verdict,
        slope=med_slope,
        bounded=verdict == "bounded",
        mean_queue=med_tail,
        queue_limit=QUEUE_FACTOR * float(np.sum(rates)),
        slopes=slopes,
        tail_means=tails,
        departure_rates=[r.departure_rates().tolist() for r in runs],
        horizon=horizon,
        replicas=replicas,
        seeds=seeds,
        rates=[float(v) for v in np.asarray(rates)],
    )
