import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolean_ldp.geometry import Domain
from boolean_ldp.measures import BinnedMeasure, BinnedPairMeasure, Partition, reference_measure
from boolean_ldp.model import ConstantKernel, ScalingRegime, TableKernel, UniformLaw
from boolean_ldp.rates import (InfeasibleConstraint, MarkConstraint, PairConstraint, conditional_rate,
                               finite_lambda_log_mgf, infimize_rate, joint_rate, legendre_conditional_rate,
                               legendre_objective, log_mgf_limit, mark_rate, pair_reference,
                               relative_entropy)
from oracles import closed_form_conditional, cramer_by_grid, entropy, simplex_rate_by_grid

DOM = Domain.cube(1.0, 3)
P1 = Partition.regular(DOM, 1, [0.0, 1.0])
P2 = Partition.regular(DOM, 1, [0.0, 0.5, 1.0])


def m2(a, b):
    return BinnedMeasure(P2, [a, b])


def const(c, lam=10.0):
    return ScalingRegime(lam, UniformLaw(0, 1), ConstantKernel(c))


def test_entropy_values():
    assert relative_entropy(m2(0.3, 0.7), m2(0.3, 0.7)) == 0.0
    v = relative_entropy(m2(0.5, 0.5), m2(0.25, 0.75))
    assert v == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-15)
    assert v == pytest.approx(0.14384, abs=1e-5)
    assert relative_entropy(m2(1, 0), m2(0, 1)) == math.inf
    with pytest.raises(ValueError):
        relative_entropy(np.array([-0.1, 1.1]), np.array([0.5, 0.5]))


def test_mark_rate():
    ref = m2(0.25, 0.75)
    assert mark_rate(ref, ref).value == 0
    assert mark_rate(m2(1.0, 1.0), ref).value == math.inf
    assert mark_rate(m2(0.5, 0.5), ref).value == pytest.approx(0.14384, abs=1e-5)


def test_pair_reference():
    w = m2(0.3, 0.7)
    reg = ScalingRegime(10.0, UniformLaw(0, 1), TableKernel(P2, np.array([[1.0, 2.0], [2.0, 4.0]])))
    assert np.allclose(pair_reference(w, reg).masses, [[0.09, 0.42], [0.42, 1.96]])
    assert pair_reference(m2(0, 0), reg).total == 0
    assert pair_reference(m2(0.3, 0.7), const(3.0)).total == pytest.approx(3.0)


def test_conditional_rate_cases():
    om = BinnedMeasure(P1, [1.0])
    reg = const(2.0)
    K = pair_reference(om, reg)
    assert conditional_rate(K, om, reg).value == pytest.approx(0.0, abs=1e-15)
    pi = BinnedPairMeasure(P1, [[4.0]])
    target = 0.5 * (4 * math.log(2) + 2 - 4)
    assert conditional_rate(pi, om, reg).value == pytest.approx(target, abs=1e-14)
    assert target == pytest.approx(0.38629, abs=1e-5)
    w = m2(1.0, 0.0)
    bad = BinnedPairMeasure(P2, [[0, 0], [0, 1.0]])
    assert conditional_rate(bad, w, reg).value == math.inf


def test_joint_rate_additive():
    ref = m2(0.25, 0.75)
    om = m2(0.5, 0.5)
    reg = const(2.0)
    pi = BinnedPairMeasure(P2, [[1.0, 0.5], [0.5, 2.0]])
    j = joint_rate(om, pi, ref, reg)
    assert j.value == j.decomposition["mark"] + j.decomposition["conditional"]
    assert j.decomposition["mark"] == pytest.approx(0.14384, abs=1e-5)
    # single-cell combination from the rate examples
    assert 0.14384 + 0.38629 == pytest.approx(0.53013, abs=1e-5)
    assert joint_rate(ref, pair_reference(ref, reg), ref, reg).value == pytest.approx(0, abs=1e-14)


def test_record_digest_and_inf_encoding():
    rv = mark_rate(m2(1.0, 1.0), m2(0.5, 0.5))
    rec = rv.to_record({"omega": np.array([1.0, 1.0])})
    assert rec["value"] == "inf"
    assert len(rec["inputs_digest"]) == 64
    json.dumps(rec)


def test_log_mgf_limit_examples():
    om = BinnedMeasure(P1, [1.0])
    reg = const(2.0)
    assert log_mgf_limit(np.zeros((1, 1)), om, reg) == 0
    assert log_mgf_limit(np.full((1, 1), math.log(2)), om, reg) == pytest.approx(1.0, abs=1e-15)
    c = 0.7
    assert log_mgf_limit(np.full((1, 1), c), om, reg) == pytest.approx(-0.5 * (1 - math.exp(c)) * 2.0)
    with pytest.raises(OverflowError):
        log_mgf_limit(np.full((1, 1), 701.0), om, reg)


def test_finite_lambda_mgf():
    om = BinnedMeasure(P1, [1.0])
    reg = const(2.0)
    assert finite_lambda_log_mgf(np.zeros((1, 1)), om, reg, 100.0) == 0
    g = np.full((1, 1), 0.3)
    lam = 1e3
    scaled = finite_lambda_log_mgf(g, om, reg, lam) / lam
    assert scaled == pytest.approx(log_mgf_limit(g, om, reg), rel=1e-2)
    # p = 0.5, g = ln 2, weight 1: (lam^2/2) log 1.5
    half = const(5.0)
    assert finite_lambda_log_mgf(np.full((1, 1), math.log(2)), om, half, 10.0) == pytest.approx(50 * math.log(1.5))


def test_legendre_examples():
    om = BinnedMeasure(P1, [1.0])
    reg = const(2.0)
    K = pair_reference(om, reg)
    assert legendre_conditional_rate(K, om, reg).value == pytest.approx(0.0, abs=1e-12)
    pi = BinnedPairMeasure(P1, [[4.0]])
    assert legendre_conditional_rate(pi, om, reg).value == pytest.approx(0.5 * (4 * math.log(2) - 2), abs=1e-6)


def test_legendre_without_outer_half_does_not_match():
    # sup_g {<g, pi> - Phi(g)} taken literally: per-entry sup is pi log(2 pi / K) - pi + K/2
    om = BinnedMeasure(P1, [1.0])
    reg = const(2.0)
    literal = 4 * math.log(2 * 4 / 2) - 4 + 1
    assert abs(literal - conditional_rate(BinnedPairMeasure(P1, [[4.0]]), om, reg).value) > 0.5


def test_legendre_objective_bounded_by_rate():
    rng = np.random.default_rng(0)
    om = m2(0.4, 0.6)
    reg = const(3.0)
    pi = BinnedPairMeasure(P2, [[0.3, 0.9], [0.9, 1.5]])
    rate = conditional_rate(pi, om, reg).value
    for _ in range(50):
        g = rng.normal(size=(2, 2))
        g = g + g.T
        assert legendre_objective(g, pi, om, reg) <= rate + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_legendre_matches_independent_search(n, seed):
    rng = np.random.default_rng(seed)
    part = Partition.regular(DOM, 1, np.linspace(0, 1, n + 1))
    table = rng.uniform(0.1, 5, (n, n))
    table = table + table.T
    reg = ScalingRegime(10.0, UniformLaw(0, 1), TableKernel(part, table))
    om = BinnedMeasure(part, rng.dirichlet(np.ones(n)))
    pi = rng.uniform(0, 3, (n, n))
    pi = pi + pi.T
    K = pair_reference(om, reg).masses
    assert legendre_conditional_rate(BinnedPairMeasure(part, pi), om, reg).value == pytest.approx(
        closed_form_conditional(pi, K), abs=1e-6)
    assert closed_form_conditional(pi, K) == pytest.approx(
        __import__("oracles").legendre_by_scalar_search(pi, K), abs=1e-6)


def test_conditional_rate_nonnegative_zero_only_at_reference():
    rng = np.random.default_rng(1)
    om = m2(0.4, 0.6)
    reg = const(3.0)
    for _ in range(200):
        pi = rng.uniform(0, 2, (2, 2))
        pi = pi + pi.T
        assert conditional_rate(BinnedPairMeasure(P2, pi), om, reg).value > 0


def test_lower_semicontinuity_on_sequences():
    om = m2(0.4, 0.6)
    reg = const(3.0)
    target = BinnedPairMeasure(P2, [[0.0, 0.5], [0.5, 1.0]])
    limit = conditional_rate(target, om, reg).value
    # support shrinking onto the limit from outside
    vals = [conditional_rate(BinnedPairMeasure(P2, [[e, 0.5 + e], [0.5 + e, 1.0]]), om, reg).value
            for e in 10.0 ** -np.arange(1, 13)]
    assert min(vals[-3:]) >= limit - 1e-6
    # mass on a pair the reference cannot charge: every term is infinite, limit finite
    dead = m2(1.0, 0.0)
    seq = [conditional_rate(BinnedPairMeasure(P2, [[3.0, 0], [0, e]]), dead, reg).value
           for e in 10.0 ** -np.arange(1, 6)]
    lim = conditional_rate(BinnedPairMeasure(P2, [[3.0, 0], [0, 0]]), dead, reg).value
    assert all(v == math.inf for v in seq) and math.isfinite(lim)


def test_entropy_invariant_under_relabeling():
    rng = np.random.default_rng(2)
    for _ in range(50):
        p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
        perm = rng.permutation(5)
        assert relative_entropy(p[perm], q[perm]) == pytest.approx(relative_entropy(p, q), rel=1e-12)


def test_infimize_mark_cramer():
    ref = m2(0.4, 0.6)
    v = infimize_rate(MarkConstraint((0,), 0.8), ref).value
    assert v == pytest.approx(0.4 - 0.8 + 0.8 * math.log(2), abs=1e-7)
    assert v == pytest.approx(cramer_by_grid(0.4, 0.8), abs=1e-6)
    simplex = infimize_rate(MarkConstraint((0,), 0.8), ref, simplex=True).value
    assert simplex == pytest.approx(simplex_rate_by_grid(0.4, 0.8), abs=1e-6)


def test_infimize_trivial_and_nested():
    ref = m2(0.4, 0.6)
    assert infimize_rate(MarkConstraint((0,), 0.3), ref).value == 0
    vals = [infimize_rate(MarkConstraint((0,), c), ref).value for c in (0.5, 0.6, 0.8, 1.2)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(InfeasibleConstraint):
        infimize_rate(MarkConstraint((0,), 1.5), ref, simplex=True)


def test_infimize_pair_single_cell():
    om = BinnedMeasure(P1, [1.0])
    v = infimize_rate(PairConstraint(None, 4.0), om, const(2.0)).value
    assert v == pytest.approx(0.5 * (4 * math.log(2) + 2 - 4), abs=1e-7)
    with pytest.raises(InfeasibleConstraint):
        infimize_rate(PairConstraint(((0, 1),), 1.0), m2(0.5, 0.5), const(2.0))
