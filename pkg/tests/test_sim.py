import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qswitch.capacity import Architecture, build_model, capacity_boundary
from qswitch.links import LinkParams, swap_success_matrix
from qswitch.schedules import brute_force_schedules, is_feasible
from qswitch.sim import (
    Simulator,
    draw_arrivals,
    estimate_stability,
    mw_ps_schedule,
    mw_sp_schedule,
    stability_verdict,
)


def model(arch, k=3, amax=4, p=0.9, q=0.9):
    return build_model(LinkParams.uniform(k, amax, p, 0.9), swap_success_matrix(k, q), arch)


def test_mw_ps_examples():
    q = np.array([0.9, 0.9, 0.9])
    assert mw_ps_schedule((1, 1, 1), [5, 0, 0], q).tolist() == [1, 0, 0]
    assert mw_ps_schedule((1, 1, 1), [0, 0, 7], q).tolist() == [0, 0, 1]
    # all queues empty: idle
    assert mw_ps_schedule((3, 3, 3), [0, 0, 0], q).tolist() == [0, 0, 0]
    # tie between pairs 12 and 13 goes to the lexicographically smaller schedule
    assert mw_ps_schedule((1, 1, 1), [2, 2, 0], q).tolist() == [0, 1, 0]


def test_mw_sp_uses_service_function():
    m = model(Architecture.SP)
    got = mw_sp_schedule((4, 4, 0), [3, 0, 0], m.service)
    assert got.tolist() == [4, 0, 0]


@settings(max_examples=60)
@given(st.lists(st.integers(0, 4), min_size=3, max_size=3), st.lists(st.integers(0, 9), min_size=3, max_size=3))
def test_mw_ps_optimal(a, queues):
    q = np.array([0.9, 0.8, 0.7])
    w = q * np.array(queues)
    got = mw_ps_schedule(a, queues, q)
    assert is_feasible(got, a)
    best = max(float(np.dot(s, w)) for s in brute_force_schedules(a))
    assert float(np.dot(got, w)) == pytest.approx(best, abs=1e-12)


def test_draw_arrivals():
    rng = np.random.default_rng(0)
    assert draw_arrivals([2, 0, 1], rng, "deterministic").tolist() == [2, 0, 1]
    with pytest.raises(ValueError):
        draw_arrivals([0.5], rng, "deterministic")
    with pytest.raises(ValueError):
        draw_arrivals([0.5], rng, "bursty")
    x = draw_arrivals(np.full(100_000, 1.5), rng)
    assert x.mean() == pytest.approx(1.5, abs=0.02)


@pytest.mark.parametrize("arch", list(Architecture))
def test_conservation_and_trace_legality(arch):
    m = model(arch)
    sim = Simulator(m, [0.8, 0.8, 0.2])
    traces = []
    res = sim.run(2000, seed=1, on_trace=traces.append)
    assert np.array_equal(res.arrived - res.served, res.final_queues)
    queue = np.zeros(3, dtype=int)
    for tr in traces:
        before = queue + np.array(tr.arrivals)
        available = tr.purified if arch is Architecture.PS else tr.links
        assert is_feasible(tr.scheduled, available)
        assert np.all(np.array(tr.swaps) <= before)
        assert np.all(np.array(tr.swap_successes) <= np.array(tr.swaps))
        assert np.all(np.array(tr.delivered) <= np.array(tr.swap_successes))
        if arch is Architecture.PS:
            assert np.all(np.array(tr.purified) <= np.array(tr.links))
        queue = before - np.array(tr.delivered)
        assert queue.tolist() == tr.queues
        assert np.all(queue >= 0)
    json.loads(traces[0].to_json())


def test_reproducible():
    m = model(Architecture.SP)
    a = Simulator(m, [1, 1, 0]).run(500, seed=4)
    b = Simulator(m, [1, 1, 0]).run(500, seed=4)
    assert np.array_equal(a.total_queue, b.total_queue)
    c = Simulator(m, [1, 1, 0]).run(500, seed=5)
    assert not np.array_equal(a.total_queue, c.total_queue)


def test_dead_links_serve_nothing():
    m = model(Architecture.NOISELESS, p=1e-9)
    res = Simulator(m, [0.5, 0.5, 0.5]).run(300, seed=0)
    assert res.served.sum() == 0
    assert res.tail_slope() > 0


def test_throughput_matches_rates_below_capacity():
    m = model(Architecture.PS)
    lam = capacity_boundary(m, (1, 1, 0)).rates * 0.8
    res = Simulator(m, lam).run(20_000, seed=2)
    dep = res.departure_rates()
    assert dep[:2] == pytest.approx(lam[:2], rel=0.02)


def test_two_user_overload_drift():
    # one pair: backlog growth rate = lambda - lambda*
    m = model(Architecture.NOISELESS, k=2, amax=2, p=0.8)
    lam_star = capacity_boundary(m, [1.0]).lambda_star
    lam = 1.5 * lam_star
    res = Simulator(m, [lam]).run(10_000, seed=3)
    assert res.tail_slope() == pytest.approx(lam - lam_star, rel=0.2)
    assert res.departure_rates()[0] == pytest.approx(lam_star, rel=0.02)


def test_verdict_rule():
    assert stability_verdict(0.0, 10.0, [1.0]) == "bounded"
    assert stability_verdict(0.0, 60.0, [1.0]) == "inconclusive"
    assert stability_verdict(0.5, 1e4, [1.0]) == "unbounded"
    assert stability_verdict(5e-3, 10.0, [1.0]) == "inconclusive"


def test_estimate_stability_guards():
    m = model(Architecture.PS)
    with pytest.raises(ValueError):
        estimate_stability(m, [1, 1, 0], horizon=100)
    with pytest.raises(ValueError):
        estimate_stability(m, [1, 1, 0], horizon=10_000, replicas=2)
    with pytest.raises(ValueError):
        Simulator(m, [1, 1])
    big = build_model(LinkParams.uniform(6, 2, 0.9, 0.9), swap_success_matrix(6, 0.9), Architecture.PS)
    with pytest.raises(ValueError):
        Simulator(big, np.zeros(15))


def test_estimate_stability_report():
    m = model(Architecture.PS, amax=3)
    lam = capacity_boundary(m, (1, 1, 0)).rates
    rep = estimate_stability(m, 0.5 * lam, horizon=10_000, replicas=3, seed=11)
    assert rep.verdict == "bounded"
    assert rep.seeds == [11, 12, 13]
    assert json.loads(rep.to_json())["replicas"] == 3
