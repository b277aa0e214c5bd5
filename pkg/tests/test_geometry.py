import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolean_ldp.geometry import Ball, Domain, ball_intersects, ball_volume, minkowski_diff_volume, pairs_intersect
from oracles import ball_volume as ref_volume

DOM3 = Domain.cube(10.0, 3)


def test_identical_centers_intersect():
    assert ball_intersects(Ball((5, 5, 5), 0.0), Ball((5, 5, 5), 2.0), DOM3)


def test_tangent_balls_intersect():
    assert ball_intersects(Ball((1, 5, 5), 1.0), Ball((3, 5, 5), 1.0), DOM3)


def test_separated_balls():
    assert not ball_intersects(Ball((1, 5, 5), 1.0), Ball((4, 5, 5), 1.0), DOM3)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        ball_intersects(Ball((1, 1), 1.0), Ball((1, 1, 1), 1.0), DOM3)


def test_center_outside_domain_rejected():
    with pytest.raises(ValueError):
        ball_intersects(Ball((11, 1, 1), 1.0), Ball((1, 1, 1), 1.0), DOM3)


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        Ball((1, 1, 1), -0.1)


def test_minkowski_volumes():
    assert minkowski_diff_volume(Ball((0, 0, 0), 1), Ball((3, 3, 3), 1)) == pytest.approx(33.5103, abs=1e-4)
    assert minkowski_diff_volume(Ball((0, 0, 0), 0), Ball((0, 0, 0), 0)) == 0
    assert minkowski_diff_volume(Ball((0, 0), 1), Ball((0, 0), 2)) == pytest.approx(28.2743, abs=1e-4)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_ball_volume_matches_gamma_formula(d):
    assert ball_volume(1.7, d) == pytest.approx(ref_volume(1.7, d), rel=1e-14)


def test_periodic_wraps_across_faces():
    torus = Domain.cube(10.0, 3, "periodic")
    a, b = Ball((0.5, 5, 5), 0.6), Ball((9.6, 5, 5), 0.6)
    assert ball_intersects(a, b, torus)
    assert not ball_intersects(a, b, DOM3)


def test_domain_validation():
    with pytest.raises(ValueError):
        Domain(2, (0, 0), (1, 0))
    with pytest.raises(ValueError):
        Domain(2, (0, 0), (1, 1), "klein")


coord = st.floats(1.0, 9.0)
radius = st.floats(0.0, 3.0)


@settings(max_examples=200, deadline=None)
@given(c1=st.tuples(coord, coord, coord), c2=st.tuples(coord, coord, coord), r1=radius, r2=radius)
def test_symmetry_and_interior_periodic_agreement(c1, c2, r1, r2):
    b1, b2 = Ball(c1, r1), Ball(c2, r2)
    assert ball_intersects(b1, b2, DOM3) == ball_intersects(b2, b1, DOM3)
    torus = Domain.cube(30.0, 3, "periodic")
    # far from every face the torus and the box agree
    shift = lambda c: tuple(v + 10 for v in c)
    assert ball_intersects(Ball(shift(c1), r1), Ball(shift(c2), r2), torus) == ball_intersects(b1, b2, DOM3)


@given(r1=radius, r2=radius, dr=st.floats(0.0, 1.0))
def test_minkowski_symmetric_monotone(r1, r2, dr):
    a, b = Ball((1, 1, 1), r1), Ball((2, 2, 2), r2)
    assert minkowski_diff_volume(a, b) == minkowski_diff_volume(b, a)
    assert minkowski_diff_volume(Ball((1, 1, 1), r1 + dr), b) >= minkowski_diff_volume(a, b)


def test_vectorized_test_agrees_with_scalar():
    rng = np.random.default_rng(3)
    pos = rng.uniform(0, 10, (40, 3))
    r = rng.uniform(0, 2, 40)
    i, j = np.triu_indices(40, 1)
    vec = pairs_intersect(pos, r, i, j, DOM3)
    scalar = [ball_intersects(Ball(pos[a], r[a]), Ball(pos[b], r[b]), DOM3) for a, b in zip(i, j)]
    assert vec.tolist() == scalar
