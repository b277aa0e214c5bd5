import json
import math

import numpy as np
import pytest

from boolean_ldp import harness as H
from boolean_ldp.geometry import Domain
from boolean_ldp.measures import BinnedMeasure, Partition
from boolean_ldp.model import ConstantKernel, CorollaryKernel, PointMass, ScalingRegime, UniformLaw
from oracles import corollary_psi, poisson_sf

DOM = Domain.cube(1.0, 3)
P = Partition.regular(DOM, 1, [0.0, 0.4, 1.0])
REG = ScalingRegime(10.0, UniformLaw(0.0, 1.0), ConstantKernel(2.0))


def always(l1, l2):
    return True


def never(l1, l2):
    return False


def test_always_and_never():
    e = H.estimate_event_probability(always, REG, 5.0, 50, 1, partition=P, dom=DOM)
    assert (e.estimate, e.stderr) == (1.0, 0.0)
    assert H.estimate_event_probability(never, REG, 5.0, 50, 1, partition=P, dom=DOM).estimate == 0.0


def test_predicate_failure_surfaces():
    def broken(l1, l2):
        raise KeyError("nope")

    with pytest.raises(RuntimeError, match="predicate"):
        H.estimate_event_probability(broken, REG, 5.0, 3, 1, partition=P, dom=DOM)


def test_replicas_must_be_positive():
    with pytest.raises(ValueError):
        H.estimate_event_probability(always, REG, 5.0, 0, 1, partition=P, dom=DOM)


def test_one_cell_count_event_matches_tail():
    # cell mean 4 at lam = 10; event L1 >= 0.8 is N >= 8, i.e. N > 7
    ev = H.MarkEvent((0,), 0.8)
    exact = poisson_sf(4.0, 7)
    for method in ("direct", "tilted"):
        e = H.estimate_event_probability(ev, REG, 10.0, 100_000, 3, partition=P, method=method)
        assert abs(e.estimate - exact) < 3 * e.stderr
    geo = H.estimate_event_probability(ev, REG, 10.0, 4000, 3, partition=P, dom=DOM, method="geometric")
    assert abs(geo.estimate - exact) < 4 * geo.stderr


def test_pair_event_shortcut_matches_geometric():
    single = Partition.single(DOM, 0.0, 1.0)
    om = BinnedMeasure(single, [1.0])
    ev = H.PairEvent(None, 2.2)
    fast = H.estimate_event_probability(ev, REG, 10.0, 200_000, 5, omega=om, partition=single)
    slow = H.estimate_event_probability(ev, REG, 10.0, 3000, 5, omega=om, partition=single, dom=DOM,
                                        method="geometric")
    assert abs(fast.estimate - slow.estimate) < 4 * math.hypot(fast.stderr, slow.stderr)


def test_worker_count_does_not_change_results():
    ev = H.MarkEvent((0,), 0.8)
    a = H.estimate_event_probability(ev, REG, 50.0, 200_000, 9, partition=P, method="tilted", workers=1)
    b = H.estimate_event_probability(ev, REG, 50.0, 200_000, 9, partition=P, method="tilted", workers=3)
    assert a == b


def test_nested_events_monotone_on_common_replicas():
    ests = [H.estimate_event_probability(H.MarkEvent((0,), c), REG, 20.0, 50_000, 4, partition=P).estimate
            for c in (0.5, 0.6, 0.7, 0.8)]
    assert all(x >= y for x, y in zip(ests, ests[1:]))


def test_full_space_slope_zero():
    ev = H.MarkEvent((0, 1), 0.0)
    res = H.ldp_slope(ev, REG, [10, 20, 40], 1000, 2, partition=P)
    assert res.slope == pytest.approx(0.0, abs=1e-12)
    assert res.predicted == 0 and res.verdict == "PASS"


def test_zero_hit_lambdas_flagged():
    ev = H.MarkEvent((0,), 0.9)
    res = H.ldp_slope(ev, REG, [100, 200], 100, 2, partition=P, method="direct")
    assert res.verdict == "ERROR"
    assert res.excluded == [100.0, 200.0]
    assert any("raise replicas" in n for n in res.notes)


def test_sweep_outputs():
    ev = H.MarkEvent((0,), 0.8)
    res = H.ldp_slope(ev, REG, [20, 40], 20_000, 2, partition=P, method="tilted")
    lines = res.to_csv("config_digest=x").splitlines()
    assert lines[0].startswith("#") and lines[1] == "lambda,estimate,stderr,log_estimate,replicas"
    doc = json.loads(res.to_json())
    assert {"slope", "slope_ci", "predicted", "verdict"} <= set(doc)


def test_mean_degree_targets():
    zero = ScalingRegime(50.0, UniformLaw(0, 1), ConstantKernel(0.0))
    r = H.mean_degree_check(zero, [20, 50], 20, 1, DOM)
    assert r.estimates == [0.0, 0.0] and r.verdict == "PASS"
    assert H.mean_degree_target(ScalingRegime(50.0, UniformLaw(0, 1), ConstantKernel(3.0)), DOM) == pytest.approx(1.5)
    cor = ScalingRegime(200.0, PointMass(0.1), CorollaryKernel(1.0))
    closed = 0.5 * (16 / 9) * math.pi**2 * 0.1**6 * (4 / 3) * math.pi * 0.2**3
    assert H.mean_degree_target(cor, DOM) == pytest.approx(closed, rel=1e-12)
    assert closed == pytest.approx(0.5 * corollary_psi(0.1, 0.1), rel=1e-12)


def test_mean_degree_conditional_mean_resolves_tiny_target():
    cor = ScalingRegime(200.0, PointMass(0.1), CorollaryKernel(1.0))
    r = H.mean_degree_check(cor, [200], 300, 2, DOM)
    target = r.extra["target"]
    assert abs(r.extra["conditional_mean"][-1] - target) < 4 * r.extra["conditional_stderr"][-1]


def test_mean_degree_clamp_invalidates():
    big = ScalingRegime(10.0, PointMass(1.0), CorollaryKernel(1.0))
    r = H.mean_degree_check(big, [10], 5, 1, DOM)
    assert r.verdict == "INVALID" and r.extra["clamp_active"]


def test_point_count_reports():
    r30 = H.point_count_bound_check(REG, 30.0, 20_000, 1)
    assert r30.violations == 0 and r30.verdict == "PASS" and r30.tail_le_bound
    r1 = H.point_count_bound_check(REG, 1.0, 20_000, 1)
    assert r1.verdict == "N/A" and r1.violations > 0
    assert r1.oracle_tail == pytest.approx(1 - 2.5 * math.exp(-1))
    r0 = H.point_count_bound_check(REG, 0.0, 100, 1)
    assert r0.violations == 0


def test_total_variation_helper():
    hist = {(0,): 50, (1,): 50}
    half = math.log(0.5)
    assert H.total_variation(hist, lambda k: half) == pytest.approx(0.0)
    assert H.total_variation({(0,): 10}, lambda k: math.log(0.25)) == pytest.approx(0.75)


def test_edge_tail_report_shape():
    rep = H.edge_tail_report(REG, DOM, 20.0, 50, 1, levels=(0.5, 5.0))
    assert set(rep["tail"]) == {"0.5", "5.0"}
    assert rep["tail"]["5.0"] <= rep["tail"]["0.5"]
