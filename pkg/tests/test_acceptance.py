"""Acceptance criteria AC-1 .. AC-9.

Each test prints one ``PASS``/``FAIL`` line (visible without ``-s``) and then
asserts, so the pytest result and the printed verdict always agree.
"""

import time

import numpy as np
import pytest

from qswitch import checks
from qswitch.bell import ProtocolId, swap_fidelity_inverse, werner
from qswitch.capacity import (
    Architecture,
    ColumnSet,
    boundary_sweep,
    build_model,
    capacity_boundary,
)
from qswitch.config import build_switch, preset
from qswitch.links import LinkParams, swap_success_matrix
from qswitch.sim import estimate_stability
from qswitch.yields import plan_rounds, pumping_expected_yield, pumping_inter_occurrence, yield_model

ANGLES = 17
SYM = ANGLES // 2


@pytest.fixture
def report(capsys):
    def emit(tag, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {tag}: {detail}")
        assert ok, f"{tag}: {detail}"

    return emit


def sweep(cfg, arch=None):
    return np.array([p.lambda_star for p in boundary_sweep(build_switch(cfg, arch), ANGLES)])


def sym_point(cfg, arch=None):
    return capacity_boundary(build_switch(cfg, arch), (1, 1, 0)).lambda_star


def test_ac1_yield_oracle(report):
    t0 = time.perf_counter()
    results = checks.yield_suite(seed=7, samples=10**6)
    elapsed = time.perf_counter() - t0
    worst = max(results, key=lambda c: c.delta)
    ok = all(c.passed for c in results) and len(results) == 4 * 11 and elapsed < 120
    report("AC-1 yield oracle", ok, f"max TV {worst.delta:.4g} ({worst.name}) < 0.005 over {len(results)} cases, {elapsed:.1f}s")


def test_ac2_pumping_means(report):
    worst = 0.0
    rounds = []
    for target in (0.92, swap_fidelity_inverse(0.9)):
        spec = plan_rounds(ProtocolId.PUMPING, werner(0.9), target)
        rounds.append(spec.rounds)
        ym = yield_model(spec, 64)
        direct = ym.pmf @ np.arange(65)
        renewal = pumping_expected_yield(pumping_inter_occurrence(spec, 64))
        worst = max(worst, float(np.abs(direct - renewal).max()))
    ok = rounds == [1, 2] and worst <= 1e-9
    report("AC-2 pumping mean consistency", ok, f"L={rounds}, max |diff| {worst:.3g} <= 1e-9")


def test_ac3_reduction(report):
    cfg = preset("table4").with_overrides(alpha_max=1, f_th=0.8)
    ps_model, sp_model = build_switch(cfg, Architecture.PS), build_switch(cfg, Architecture.SP)
    assert ps_model.spec.rounds == 0 and sp_model.spec.rounds == 0
    ps = np.array([p.lambda_star for p in boundary_sweep(ps_model, ANGLES)])
    sp = np.array([p.lambda_star for p in boundary_sweep(sp_model, ANGLES)])
    coincide = float(np.abs(ps - sp).max())
    worst_k2 = 0.0
    for p in (0.5, 0.9, 1.0):
        for q in (0.5, 0.9, 1.0):
            for arch in (Architecture.PS, Architecture.SP):
                m = build_model(LinkParams.uniform(2, 1, p, 0.9), swap_success_matrix(2, q), arch, f_th=0.8)
                lam = capacity_boundary(m, [1.0], columns=ColumnSet(m, p_cut=0.0)).lambda_star
                worst_k2 = max(worst_k2, abs(lam - p * p * q))
    ok = coincide <= 1e-9 and worst_k2 <= 1e-12
    report("AC-3 reduction", ok, f"PS-SP max gap {coincide:.3g} <= 1e-9; K=2 max |lambda* - p^2 q| {worst_k2:.3g}")


def test_ac4_architecture_ordering(report):
    t0 = time.perf_counter()
    cfg = preset("table4")
    nl, ps, sp = (sweep(cfg, a) for a in (Architecture.NOISELESS, Architecture.PS, Architecture.SP))
    elapsed = time.perf_counter() - t0
    tol = 1e-9
    ordered = bool(np.all(nl >= ps - tol) and np.all(ps >= sp - tol))
    strict = nl[SYM] > ps[SYM] + tol and ps[SYM] > sp[SYM] + tol
    ok = ordered and strict and elapsed < 600
    report(
        "AC-4 NoiseLess >= PS >= SP",
        ok,
        f"symmetric angle {nl[SYM]:.6f} > {ps[SYM]:.6f} > {sp[SYM]:.6f}; all {ANGLES} angles ordered={ordered}; {elapsed:.1f}s",
    )


@pytest.mark.slow
def test_ac5_stability(report):
    t0 = time.perf_counter()
    cfg = preset("table4")
    parts, ok = [], True
    for arch in (Architecture.PS, Architecture.SP):
        m = build_switch(cfg, arch)
        point = capacity_boundary(m, (1, 1, 0)).rates
        for scale, want in ((0.9, "bounded"), (1.2, "unbounded")):
            rep = estimate_stability(m, scale * point, horizon=10**5, replicas=3, seed=0)
            good = rep.verdict == want and (want == "bounded" or rep.slope > 0)
            ok &= good
            parts.append(f"{arch.value} {scale}x {rep.verdict} (slope {rep.slope:.3g})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 600
    report("AC-5 max-weight stability", ok, "; ".join(parts) + f"; {elapsed:.0f}s")


def test_ac6_protocol_ordering(report):
    cfg = preset("strict")
    curves = {name: sweep(cfg.with_overrides(protocol=name)) for name in ("dejmps", "bbpssw", "pumping")}
    tol = 1e-9
    over_bbpssw = bool(np.all(curves["dejmps"] >= curves["bbpssw"] - tol))
    over_pumping = bool(np.all(curves["dejmps"] >= curves["pumping"] - tol))
    s = {k: v[SYM] for k, v in curves.items()}
    report(
        "AC-6 DEJMPS >= BBPSSW and >= Pumping",
        over_bbpssw and over_pumping,
        f"symmetric angle dejmps {s['dejmps']:.6f}, bbpssw {s['bbpssw']:.6f}, pumping {s['pumping']:.6f}; "
        f"dejmps>=bbpssw everywhere={over_bbpssw}, dejmps>=pumping everywhere={over_pumping}",
    )


def test_ac7_noise_threshold(report):
    tol = 1e-9
    parts, ok = [], True
    for f_th, hi, lo in ((0.85, "werner", "binary"), (0.9, "binary", "werner")):
        cfg = preset("table4").with_overrides(f_th=f_th)
        rounds = {n: build_switch(cfg.with_overrides(noise=n)).spec.rounds for n in ("werner", "binary")}
        a, b = sweep(cfg.with_overrides(noise=hi)), sweep(cfg.with_overrides(noise=lo))
        good = bool(np.all(a >= b - tol))
        ok &= good
        parts.append(f"F_th={f_th}: {hi} {a[SYM]:.6f} >= {lo} {b[SYM]:.6f} (L werner={rounds['werner']}, binary={rounds['binary']})")
    want_rounds = (
        build_switch(preset("table4")).spec.rounds == 1
        and build_switch(preset("bitflip")).spec.rounds == 1
        and build_switch(preset("strict")).spec.rounds == 2
        and build_switch(preset("strict").with_overrides(noise="binary")).spec.rounds == 1
    )
    report("AC-7 noise threshold effect", ok and want_rounds, "; ".join(parts))


def test_ac8_mw_optimality(report):
    results = checks.mw_suite(seed=7, instances=1000, alpha_max=4)
    ok = all(c.passed for c in results)
    report("AC-8 max-weight optimality", ok, "; ".join(f"{c.name} gap {c.delta:.3g}" for c in results))


def test_ac9_monotonicity(report):
    cfg = preset("table4")
    tol = 1e-9
    by_alpha = [sweep(cfg.with_overrides(alpha_max=a)) for a in (2, 4, 6)]
    by_link = [sweep(cfg.with_overrides(f_link=f)) for f in (0.86, 0.88, 0.90, 0.92)]
    by_th = [sweep(cfg.with_overrides(f_th=f)) for f in (0.8, 0.85, 0.9)]

    def nondecreasing(curves):
        return all(np.all(b >= a - tol) for a, b in zip(curves, curves[1:]))

    alpha_ok = nondecreasing(by_alpha)
    link_ok = nondecreasing(by_link)
    th_ok = nondecreasing(by_th[::-1])
    link_sym = [c[SYM] for c in by_link]
    jump_big, jump_small = link_sym[2] - link_sym[1], link_sym[1] - link_sym[0]
    rounds = [build_switch(cfg.with_overrides(f_link=f)).spec.rounds for f in (0.86, 0.88, 0.90, 0.92)]
    jump_ok = jump_big > jump_small and rounds[1] == 2 and rounds[2] == 1
    report(
        "AC-9 monotonicity",
        alpha_ok and link_ok and th_ok and jump_ok,
        f"alpha_max {alpha_ok}, F_link {link_ok}, F_th {th_ok}; "
        f"jump 0.88->0.90 {jump_big:.4f} > 0.86->0.88 {jump_small:.4f} (L={rounds})",
    )
