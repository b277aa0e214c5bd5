import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boolean_ldp.geometry import Ball, Domain
from boolean_ldp.model import (ConstantKernel, CorollaryKernel, PointMass, PowerLaw, ScalingRegime,
                               TableKernel, UniformLaw, connection_exponent, connection_probability,
                               edge_probability_at_lambda, kernel_limit, law_from_dict,
                               kernel_from_dict, prob_from_exponent)
from boolean_ldp.measures import Partition
from oracles import corollary_psi

DOM = Domain.cube(1.0, 3)


def regime(lam=1000.0, vol=1.0):
    return ScalingRegime(lam, UniformLaw(0.0, 1.0), CorollaryKernel(vol))


def test_exponent_to_probability():
    assert prob_from_exponent(0.0) == 0.0
    assert prob_from_exponent(math.log(2)) == pytest.approx(0.5, abs=1e-15)
    assert prob_from_exponent(50.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        prob_from_exponent(-1e-3)


def test_corollary_kernel_unit_radii():
    psi = kernel_limit(Ball((0.2, 0.2, 0.2), 1), Ball((0.8, 0.8, 0.8), 1), regime())
    assert psi == pytest.approx(corollary_psi(1, 1), rel=1e-13)
    assert psi == pytest.approx(512 / 27 * math.pi**3, rel=1e-13)
    assert kernel_limit(Ball((0.5,) * 3, 0), Ball((0.5,) * 3, 1), regime()) == 0


def test_corollary_kernel_requires_three_dimensions():
    with pytest.raises(ValueError):
        kernel_limit(Ball((0.1, 0.1), 1), Ball((0.2, 0.2), 1), regime())


@given(st.floats(0, 2), st.floats(0, 2))
def test_kernel_symmetric(r1, r2):
    b1, b2 = Ball((0.1, 0.2, 0.3), r1), Ball((0.9, 0.4, 0.5), r2)
    assert kernel_limit(b1, b2, regime()) == kernel_limit(b2, b1, regime())
    assert kernel_limit(b1, b2, regime(vol=2.0)) == pytest.approx(corollary_psi(r1, r2, 2.0), rel=1e-12, abs=1e-300)


def test_paper_scaling_exponent_is_psi_over_lambda():
    reg = regime(250.0)
    b1, b2 = Ball((0.5,) * 3, 0.3), Ball((0.5,) * 3, 0.4)
    assert connection_exponent(b1, b2, reg) == pytest.approx(corollary_psi(0.3, 0.4) / 250.0, rel=1e-13)


def test_connection_probability_properties():
    reg = regime(100.0)
    rs = np.linspace(0, 0.6, 7)
    ps = [connection_probability(Ball((0.5,) * 3, 0.3), Ball((0.5,) * 3, r), reg) for r in rs]
    assert all(0 <= p <= 1 for p in ps)
    assert np.all(np.diff(ps) >= 0)


def test_taylor_remainder_bound():
    b = Ball((0.5,) * 3, 0.4)
    psi = corollary_psi(0.4, 0.4)
    for lam in (10.0, 100.0, 1e3, 1e4):
        p = connection_probability(b, b, regime(lam))
        assert abs(lam * p - psi) <= psi**2 / (2 * lam) * (1 + 1e-9)
        # the clamped canonical rule agrees to second order
        assert abs(edge_probability_at_lambda(psi, lam) - p) <= psi**2 / (2 * lam**2) * (1 + 1e-9)


def test_edge_probability_at_lambda():
    assert edge_probability_at_lambda(0.0, 3.0) == 0.0
    assert edge_probability_at_lambda(3.0, 6.0) == 0.5
    assert edge_probability_at_lambda(10.0, 5.0) == 1.0
    with pytest.raises(ValueError):
        edge_probability_at_lambda(1.0, 0.0)


def test_regime_validation():
    with pytest.raises(ValueError):
        ScalingRegime(-1.0, UniformLaw(0, 1), ConstantKernel(1.0))
    with pytest.raises(ValueError):
        UniformLaw(-0.5, 1.0)


def test_power_law_masses():
    law = PowerLaw(0.0, 1.0, 3.0)
    assert law.interval_mass(0.0, 0.5) == pytest.approx(1 / 16)
    assert law.interval_mass(0.5, 1.0, closed=True) == pytest.approx(15 / 16)
    u = np.linspace(0.01, 0.99, 9)
    assert np.allclose(law.cdf(law.ppf(u)), u)


def test_point_mass_interval_conventions():
    law = PointMass(0.5)
    assert law.interval_mass(0.0, 0.5) == 0.0
    assert law.interval_mass(0.5, 1.0) == 1.0
    assert law.interval_mass(0.0, 0.5, closed=True) == 1.0


def test_table_kernel_lookup_and_symmetry():
    part = Partition.regular(DOM, 1, [0.0, 0.5, 1.0])
    k = TableKernel(part, np.array([[1.0, 2.0], [2.0, 4.0]]))
    reg = ScalingRegime(10.0, UniformLaw(0, 1), k)
    assert np.array_equal(k.cell_matrix(part, reg), [[1, 2], [2, 4]])
    with pytest.raises(ValueError):
        TableKernel(part, np.array([[1.0, 2.0], [3.0, 4.0]]))


def test_dict_round_trips():
    assert law_from_dict({"law": "power", "lo": 0, "hi": 1, "exponent": 3}) == PowerLaw(0.0, 1.0, 3.0)
    assert kernel_from_dict({"kind": "constant", "value": 2}) == ConstantKernel(2.0)
    with pytest.raises(ValueError):
        kernel_from_dict({"kind": "mystery"})
