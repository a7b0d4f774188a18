"""Oracle cross-checks run by ``qswitch verify``.

Each suite compares a production path against an independent route:
analytic yields against protocol simulation, max-weight search against
brute-force schedule enumeration, and maximal-schedule LPs against LPs
over every feasible schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from qswitch.bell import ProtocolId, binary, swap_fidelity_inverse, werner
from qswitch.capacity import Architecture, ColumnSet, build_model, capacity_boundary
from qswitch.links import LinkParams, swap_success_matrix
from qswitch.schedules import brute_force_schedules
from qswitch.sim import mw_ps_schedule, mw_sp_schedule
from qswitch.yields import PurificationSpec, monte_carlo_yield_oracle, plan_rounds, yield_model

TV_TOL = 0.005
LP_TOL = 1e-9


@dataclass
class Check:
    name: str
    delta: float
    tol: float
    exact: bool = False

    @property
    def passed(self) -> bool:
        return self.delta == 0.0 if self.exact else self.delta < self.tol

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: delta={self.delta:.3g} tol={self.tol:.3g}"


def protocol_matrix() -> dict[str, PurificationSpec]:
    """One multi-round plan per protocol family at the stringent F_th = 0.9 link target."""
    link_target = swap_fidelity_inverse(0.9)
    return {
        "dejmps-binary": plan_rounds(ProtocolId.DEJMPS_BINARY, binary(0.9), 0.99),
        "dejmps-bell-diagonal": plan_rounds(ProtocolId.DEJMPS_BELL_DIAGONAL, werner(0.9), link_target),
        "bbpssw-werner": plan_rounds(ProtocolId.BBPSSW_WERNER, werner(0.9), link_target),
        "pumping": plan_rounds(ProtocolId.PUMPING, werner(0.9), link_target),
    }


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    n = max(len(p), len(q))
    return 0.5 * float(np.abs(np.pad(p, (0, n - len(p))) - np.pad(q, (0, n - len(q)))).sum())


def yield_suite(seed: int = 7, samples: int = 10**6, xs=range(2, 13)) -> list[Check]:
    out = []
    for name, spec in protocol_matrix().items():
        ym = yield_model(spec, max(xs))
        for x in xs:
            mc = monte_carlo_yield_oracle(spec, x, samples, seed + x)
            tv = total_variation(ym.pmf[x, : x + 1], mc)
            out.append(Check(f"yield {name} L={spec.rounds} x={x}", tv, TV_TOL))
    return out


def _weight(schedule, values) -> Fraction:
    """Schedule weight in exact rational arithmetic, so true ties compare equal."""
    return sum((values(n, int(s)) for n, s in enumerate(schedule)), Fraction(0))


def mw_suite(seed: int = 7, instances: int = 1000, alpha_max: int = 4) -> list[Check]:
    """Max-weight choice versus the best of every feasible schedule, K = 3."""
    rng = np.random.default_rng(seed)
    params = LinkParams.uniform(3, alpha_max, 0.9, 0.9)
    q = swap_success_matrix(3, 0.9)
    sp_model = build_model(params, q, Architecture.SP)
    q_pairs = sp_model.q_pairs
    worst_ps = worst_sp = 0.0
    for _ in range(instances):
        a = tuple(int(v) for v in rng.integers(0, alpha_max + 1, size=3))
        queues = rng.integers(0, 20, size=3)
        candidates = brute_force_schedules(a)

        def ps_val(n, s):
            return s * Fraction(q_pairs[n]) * int(queues[n])

        def sp_val(n, s):
            return Fraction(sp_model.service[n].values[s]) * int(queues[n])

        best_ps = max(_weight(c, ps_val) for c in candidates)
        best_sp = max(_weight(c, sp_val) for c in candidates)
        got_ps = _weight(mw_ps_schedule(a, queues, q_pairs), ps_val)
        got_sp = _weight(mw_sp_schedule(a, queues, sp_model.service), sp_val)
        worst_ps = max(worst_ps, float(best_ps - got_ps))
        worst_sp = max(worst_sp, float(best_sp - got_sp))
    return [
        Check(f"mw-ps optimality over {instances} instances", worst_ps, 0.0, exact=True),
        Check(f"mw-sp optimality over {instances} instances", worst_sp, 0.0, exact=True),
    ]


def lp_suite(alphas=(1, 2, 3)) -> list[Check]:
    """Maximal-only columns must not change the boundary."""
    out = []
    q = swap_success_matrix(3, 0.9)
    for amax in alphas:
        params = LinkParams.uniform(3, amax, 0.9, 0.9)
        for arch in Architecture:
            model = build_model(params, q, arch)
            full = ColumnSet(model, maximal_only=False)
            maxi = ColumnSet(model, maximal_only=True)
            for w in ((1, 0, 0), (1, 1, 0), (1, 2, 1)):
                a = capacity_boundary(model, w, columns=full).lambda_star
                b = capacity_boundary(model, w, columns=maxi).lambda_star
                out.append(Check(f"lp {arch.value} alpha={amax} w={w}", abs(a - b), LP_TOL))
    return out


SUITES = {"yield": yield_suite, "mw": mw_suite, "lp": lp_suite}
