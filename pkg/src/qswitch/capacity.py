"""Capacity regions of the switch under PS, SP and noise-free operation.

Both regions have the same shape: a rate vector is supportable when it is
dominated by a time-average of per-slot expected service, where in each
count state ``a`` the scheduler may randomize over feasible schedules (or
idle). The architectures differ only in which count law weights the states
and in the per-pair service function of a schedule:

* PS: purified link counts, service q_ij * pi_ij
* SP: raw link counts, service H(pi_ij) = E[E[Y | X = Binomial(pi_ij, q_ij)]]
* noise-less: raw link counts, service q_ij * pi_ij

The boundary along a weight direction is a linear program over the
time-sharing fractions b[a, pi] and the scalar rate.
"""

from __future__ import annotations

import enum
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog
from scipy.stats import binom

from qswitch.bell import (
    BellDiagonalState,
    NoiseClass,
    ProtocolId,
    make_state,
    swap_fidelity_inverse,
    swap_state,
)
from qswitch.links import CountLaw, LinkParams, purified_link_law, raw_link_law
from qswitch.schedules import DEFAULT_CAP, enumerate_schedules, user_pairs
from qswitch.yields import (
    PurificationSpec,
    TargetUnreachableError,
    YieldModel,
    identity_spec,
    plan_rounds,
    yield_model,
)

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
DEFAULT_P_CUT = 1e-12
DEFAULT_X_MAX = 64


class Architecture(enum.Enum):
    PS = "PS"
    SP = "SP"
    NOISELESS = "NoiseLess"


class CapacityError(RuntimeError):
    pass


class ZeroCapacityError(CapacityError):
    """The fidelity target cannot be met, so the region is {0}."""


@dataclass(frozen=True)
class ServiceFunction:
    """Expected number of served requests for pi swaps on one pair: values[pi]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v[0] != 0.0 or np.any(np.diff(v) < -1e-12):
            raise ValueError("service function must start at 0 and be nondecreasing")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __call__(self, pi):
        return self.values[pi]


def service_function(ym: YieldModel, q_ij: float, pi_max: int) -> ServiceFunction:
    """H(pi) = sum_l E[Y | X = l] C(pi, l) q^l (1 - q)^(pi - l)."""
    if ym.x_max < pi_max:
        raise ValueError(f"yield table covers x <= {ym.x_max}, need {pi_max}")
    vals = np.zeros(pi_max + 1)
    for pi in range(1, pi_max + 1):
        ls = np.arange(pi + 1)
        vals[pi] = np.dot(ym.mean[: pi + 1], binom.pmf(ls, pi, q_ij))
    return ServiceFunction(vals)


def linear_service(q_ij: float, pi_max: int) -> ServiceFunction:
    return ServiceFunction(q_ij * np.arange(pi_max + 1, dtype=float))


@dataclass(frozen=True)
class SwitchModel:
    """Everything the LP and the simulator need about one switch setup."""

    params: LinkParams
    q: np.ndarray
    arch: Architecture
    spec: PurificationSpec
    yields: YieldModel
    raw_law: CountLaw
    law: CountLaw
    service: tuple[ServiceFunction, ...]
    protocol: Optional[ProtocolId] = None
    f_th: Optional[float] = None

    @property
    def k(self) -> int:
        return self.params.k

    @property
    def pairs(self):
        return user_pairs(self.params.k)

    @cached_property
    def q_pairs(self) -> np.ndarray:
        return np.array([self.q[i, j] for i, j in self.pairs])

    def service_matrix(self, schedules: np.ndarray) -> np.ndarray:
        """Per-pair expected service of each schedule row."""
        out = np.empty(schedules.shape, dtype=float)
        for n, fn in enumerate(self.service):
            out[:, n] = fn.values[schedules[:, n]]
        return out


def purification_target(arch: Architecture, f_th: float) -> float:
    return swap_fidelity_inverse(f_th) if arch is Architecture.PS else f_th


def swapped_input(noise: NoiseClass, f_link: float) -> BellDiagonalState:
    """State of an end-to-end pair made from two fresh link pairs."""
    link = make_state(noise, f_link)
    return swap_state(link, link)


def build_model(
    params: LinkParams,
    q: np.ndarray,
    arch: Architecture,
    protocol: ProtocolId = ProtocolId.DEJMPS_BELL_DIAGONAL,
    noise: NoiseClass = NoiseClass.WERNER,
    f_th: float = 0.85,
    x_max: int = DEFAULT_X_MAX,
    max_rounds: int = 32,
) -> SwitchModel:
    """Assemble the purification plan, yield tables and service functions."""
    raw = raw_link_law(params)
    k, amax = params.k, params.alpha_max
    x_max = max(x_max, amax)
    pairs = user_pairs(k)

    if arch is Architecture.NOISELESS:
        spec = identity_spec(make_state(noise, params.f_link), protocol)
        ym = YieldModel.identity(x_max)
        service = tuple(linear_service(q[i, j], amax) for i, j in pairs)
        return SwitchModel(params, q, arch, spec, ym, raw, raw, service, protocol, f_th)

    if not 0.5 < f_th < 1:
        raise ValueError(f"F_th must be in (0.5, 1), got {f_th}")
    if arch is Architecture.PS:
        start = make_state(noise, params.f_link)
    else:
        start = swapped_input(noise, params.f_link)
        if start.fidelity <= 0.5:
            raise ZeroCapacityError(
                f"swapped fidelity {start.fidelity:.6f} <= 0.5 cannot be purified"
            )
    target = purification_target(arch, f_th)
    if target >= 1.0:
        raise ZeroCapacityError(f"purification target {target} is not reachable")
    if start.fidelity >= target:
        spec = identity_spec(start, protocol)
    else:
        try:
            spec = plan_rounds(protocol, start, target, max_rounds)
        except TargetUnreachableError as exc:
            raise ZeroCapacityError(str(exc)) from exc
    ym = yield_model(spec, x_max)

    if arch is Architecture.PS:
        law = purified_link_law(raw, ym)
        service = tuple(linear_service(q[i, j], amax) for i, j in pairs)
    else:
        law = raw
        service = tuple(service_function(ym, q[i, j], amax) for i, j in pairs)
    return SwitchModel(params, q, arch, spec, ym, raw, law, service, protocol, f_th)


@dataclass(frozen=True)
class Column:
    state: tuple[int, ...]
    schedule: tuple[int, ...]
    fraction: float


@dataclass
class CapacityResult:
    lambda_star: float
    weights: np.ndarray
    status: str
    gap: float
    columns: list[Column] = field(default_factory=list)
    truncated_mass: float = 0.0

    @property
    def rates(self) -> np.ndarray:
        return self.lambda_star * self.weights


class ColumnSet:
    """LP columns: one per (count state, schedule) pair with P(state) > p_cut."""

    def __init__(
        self,
        model: SwitchModel,
        maximal_only: bool = True,
        p_cut: float = DEFAULT_P_CUT,
        cap: int = DEFAULT_CAP,
    ):
        self.model = model
        states, probs, scheds, owner = [], [], [], []
        kept = 0.0
        for a, pa in model.law.states(p_cut):
            kept += pa
            if not any(a):
                continue
            s = enumerate_schedules(a, maximal_only=maximal_only, cap=cap)
            owner.append(np.full(len(s), len(states)))
            states.append(a)
            probs.append(pa)
            scheds.append(s)
            if sum(len(x) for x in scheds) > cap:
                raise CapacityError(f"more than {cap} LP columns")
        self.truncated_mass = max(0.0, 1.0 - kept)
        n_pairs = len(model.pairs)
        self.states = states
        self.state_prob = np.array(probs)
        self.schedules = np.vstack(scheds) if scheds else np.zeros((0, n_pairs), dtype=int)
        self.owner = np.concatenate(owner) if owner else np.zeros(0, dtype=int)
        self.service = model.service_matrix(self.schedules)
        # expected service contributed to each pair by b = 1 on a column
        self.gain = self.service * self.state_prob[self.owner][:, None]

        n_cols = len(self.owner)
        self._state_rows = sp.csr_matrix(
            (np.ones(n_cols), (self.owner, np.arange(n_cols))), shape=(len(states), n_cols)
        )

    def __len__(self) -> int:
        return len(self.owner)

    def solve(self, direction: np.ndarray) -> tuple[float, np.ndarray, str, float]:
        """Maximize t subject to t * direction <= expected service.

        The LP runs over y = P(a) * b so that matrix entries stay O(1); rare
        states would otherwise fall under the solver's small-entry cutoff.
        """
        n_pairs = len(direction)
        n_cols = len(self)
        lam_col = sp.csr_matrix(np.concatenate([direction, np.zeros(len(self.states))])[:, None])
        body = sp.vstack([-sp.csr_matrix(self.service.T), self._state_rows])
        a_ub = sp.hstack([lam_col, body], format="csc")
        b_ub = np.concatenate([np.zeros(n_pairs), self.state_prob])
        c = np.zeros(n_cols + 1)
        c[0] = -1.0
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
        if res.status == 3:
            return math.inf, np.zeros(n_cols), "unbounded", 0.0
        if res.status != 0:
            raise CapacityError(f"LP solver failed: {res.message}")
        dual = float(b_ub @ res.ineqlin.marginals)
        gap = abs(res.fun - dual)
        if gap > 1e-7 * max(1.0, abs(res.fun)):
            raise CapacityError(f"LP duality gap {gap:.3g} exceeds tolerance")
        b = np.clip(res.x[1:] / self.state_prob[self.owner], 0.0, None)
        return float(res.x[0]), b, "optimal", gap

    def certificate_slack(self, rates: np.ndarray, b: np.ndarray) -> float:
        """Smallest slack over every LP constraint at (rates, b); >= 0 when valid."""
        service = self.gain.T @ b
        per_state = self._state_rows @ b
        return float(min((service - rates).min(), (1.0 - per_state).min(), b.min(initial=0.0)))

    def columns_for(self, b: np.ndarray, tol: float = 1e-12) -> list[Column]:
        return [
            Column(self.states[self.owner[c]], tuple(int(v) for v in self.schedules[c]), float(b[c]))
            for c in np.flatnonzero(b > tol)
        ]


def _weights(model: SwitchModel, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(model.pairs),):
        raise ValueError(f"need {len(model.pairs)} pair weights, got shape {w.shape}")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with at least one positive entry")
    return w / w.sum()


def capacity_boundary(
    model: SwitchModel,
    weights,
    columns: Optional[ColumnSet] = None,
    maximal_only: bool = True,
) -> CapacityResult:
    """Largest lambda with lambda * w in the (closed) capacity region, sum(w) = 1."""
    w = _weights(model, weights)
    cols = columns if columns is not None else ColumnSet(model, maximal_only)
    lam, b, status, gap = cols.solve(w)
    if status != "optimal":
        raise CapacityError(f"boundary LP is {status}")
    return CapacityResult(lam, w, status, gap, cols.columns_for(b), cols.truncated_mass)


@dataclass
class Membership:
    feasible: bool
    status: str  # interior, boundary or outside
    scale: float  # largest t with t * rates supportable
    columns: list[Column] = field(default_factory=list)
    slack: float = 0.0


def membership(
    model: SwitchModel, rates, columns: Optional[ColumnSet] = None, tol: float = FEAS_TOL
) -> Membership:
    """Decide whether ``rates`` lies in the closed region; returns a b-certificate."""
    lam = np.asarray(rates, dtype=float)
    if np.any(lam < 0):
        raise ValueError("rates must be nonnegative")
    cols = columns if columns is not None else ColumnSet(model)
    if not np.any(lam > 0):
        return Membership(True, "interior", math.inf, [], 0.0)
    t, b, status, _ = cols.solve(lam)
    if status == "unbounded" or t > 1 + tol:
        kind = "interior"
    elif t >= 1 - tol:
        kind = "boundary"
    else:
        kind = "outside"
    if kind == "outside":
        return Membership(False, kind, t)
    # fractions optimal for t * rates, scaled by 1/t, still dominate rates
    cert = b / t if math.isfinite(t) and t > 1 else b
    return Membership(True, kind, t, cols.columns_for(cert), cols.certificate_slack(lam, cert))


@dataclass(frozen=True)
class BoundaryPoint:
    angle: float
    weights: np.ndarray
    lambda_star: float

    @property
    def rates(self) -> np.ndarray:
        return self.lambda_star * self.weights


def sweep_weights(model: SwitchModel, n_angles: int, active=((0, 1), (0, 2))) -> list[tuple[float, np.ndarray]]:
    """Weight vectors on the quarter circle over two active pairs, others zero."""
    if n_angles < 2:
        raise ValueError("need at least two angles")
    index = {pr: n for n, pr in enumerate(model.pairs)}
    out = []
    for theta in np.linspace(0.0, math.pi / 2, n_angles):
        c, s = math.cos(theta), math.sin(theta)
        c, s = (0.0 if abs(c) < 1e-15 else c), (0.0 if abs(s) < 1e-15 else s)
        w = np.zeros(len(model.pairs))
        w[index[active[0]]] = c
        w[index[active[1]]] = s
        out.append((float(theta), w / w.sum()))
    return out


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("QSWITCH_THREADS", "1")))
    except ValueError:
        return 1


def boundary_sweep(
    model: SwitchModel, n_angles: int, active=((0, 1), (0, 2)), columns: Optional[ColumnSet] = None
) -> list[BoundaryPoint]:
    cols = columns if columns is not None else ColumnSet(model)
    dirs = sweep_weights(model, n_angles, active)

    def one(item):
        theta, w = item
        return BoundaryPoint(theta, w, capacity_boundary(model, w, columns=cols).lambda_star)

    workers = worker_count()
    if workers == 1:
        return [one(d) for d in dirs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, dirs))
