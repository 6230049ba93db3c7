import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conformal_cantor.geometry import (
    AffineMap,
    ConvexPolygon,
    Square,
    area,
    clip,
    compose,
    conjugate_by_symmetry,
    contact,
    dihedral_maps,
    invert,
    overlap_area,
    overlap_area_batch,
)

C0 = 1 - 7e-8


def close(f: AffineMap, g: AffineMap, tol=1e-14):
    return f.distance(g) <= tol


def mc_overlap(A: AffineMap, side: float, n: int, seed: int = 0) -> float:
    """Monte Carlo estimate of area(S n A(S)) from uniform points in S."""
    rng = np.random.default_rng(seed)
    inv = invert(A)
    h = side / 2
    hits = 0
    for chunk in range(0, n, 1_000_000):
        m = min(1_000_000, n - chunk)
        z = rng.uniform(-h, h, m) + 1j * rng.uniform(-h, h, m)
        w = inv.alpha * z + inv.beta
        hits += int(np.count_nonzero((np.abs(w.real) <= h) & (np.abs(w.imag) <= h)))
    return hits / n * side * side


def test_compose_examples():
    assert close(compose(AffineMap(1, 1), AffineMap(2, 0)), AffineMap(2, 1))
    f = AffineMap(0.3 + 0.2j, -1 + 4j)
    assert close(compose(AffineMap.identity(), f), f)
    assert close(compose(f, invert(f)), AffineMap.identity())


def test_invert_examples():
    assert close(invert(AffineMap(2, 1)), AffineMap(0.5, -0.5))
    assert close(invert(AffineMap.identity()), AffineMap.identity())
    assert close(invert(AffineMap(1j, 0)), AffineMap(-1j, 0))


def test_degenerate_map_rejected():
    with pytest.raises(ValueError):
        AffineMap(0, 1)


def test_clip_examples():
    unit = Square(0.5 + 0.5j, 1).polygon()
    assert clip(unit, unit).area == pytest.approx(1.0)
    assert clip(unit, Square(5, 1).polygon()) is None
    half = clip(unit, Square(1 + 0.5j, 1).polygon())
    assert half.area == pytest.approx(0.5)
    x0, x1, y0, y1 = half.bounds()
    assert (x0, x1, y0, y1) == pytest.approx((0.5, 1, 0, 1))


def test_touching_squares_have_contact_but_no_area():
    a = Square(0, 1).polygon()
    b = Square(1, 1).polygon()
    assert clip(a, b) is None
    assert contact(a, b)
    assert not contact(a, Square(1.01, 1).polygon())
    corner = Square(1 + 1j, 1).polygon()
    assert clip(a, corner) is None and contact(a, corner)


def test_area_examples():
    assert area(Square(0, 1).polygon()) == pytest.approx(1.0)
    assert area(ConvexPolygon((0, 1, 1j))) == pytest.approx(0.5)
    assert area(Square(3, C0).polygon()) == pytest.approx(C0**2)


def test_polygon_must_be_convex_ccw():
    with pytest.raises(ValueError):
        ConvexPolygon((0, 1j, 1))  # clockwise
    with pytest.raises(ValueError):
        ConvexPolygon((0, 2, 1 + 0.1j, 2 + 2j, 2j))


def test_overlap_area_examples():
    assert overlap_area(AffineMap.identity(), C0) == pytest.approx(C0**2, rel=1e-14)
    assert overlap_area(AffineMap(1j, 0), C0) == pytest.approx(C0**2, rel=1e-14)
    octagon = overlap_area(AffineMap(cmath.exp(1j * math.pi / 4), 0), 1)
    assert octagon == pytest.approx(2 * (math.sqrt(2) - 1), abs=1e-12)


def test_octagon_against_monte_carlo():
    A = AffineMap(cmath.exp(1j * math.pi / 4), 0)
    assert abs(mc_overlap(A, 1.0, 10**7) - 0.828427) < 1e-3


def test_batch_agrees_with_clipping():
    rng = np.random.default_rng(5)
    n = 400
    alpha = np.exp(rng.uniform(-1, 1, n)) * np.exp(2j * math.pi * rng.uniform(size=n))
    beta = rng.uniform(0, 2 * C0, n) * np.exp(2j * math.pi * rng.uniform(size=n))
    batch = overlap_area_batch(alpha, beta, C0)
    direct = np.array([overlap_area(AffineMap(a, b), C0) for a, b in zip(alpha, beta)])
    assert np.max(np.abs(batch - direct)) < 1e-13


def test_batch_handles_shared_edges():
    # identical squares and half-shifted squares share boundary segments
    alpha = np.array([1, 1, 1j, -1, 1])
    beta = np.array([0, 0.5 * C0, 0, 0.5j * C0, C0])
    np.testing.assert_allclose(overlap_area_batch(alpha, beta, C0), [C0**2, C0**2 / 2, C0**2, C0**2 / 2, 0],
                               atol=1e-15)


maps = st.builds(
    lambda r, t, b, p: AffineMap(r * cmath.exp(1j * t), b * cmath.exp(1j * p)),
    st.floats(0.3, 3.0),
    st.floats(0, 2 * math.pi),
    st.floats(0, 3.0),
    st.floats(0, 2 * math.pi),
)


@settings(max_examples=200, deadline=None)
@given(maps)
def test_area_scales_by_alpha_squared(A):
    direct = overlap_area(A, C0)
    pulled = overlap_area(invert(A), C0) * abs(A.alpha) ** 2
    assert direct == pytest.approx(pulled, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(maps)
def test_dihedral_invariance(A):
    base = overlap_area(A, C0)
    for sym in dihedral_maps():
        assert overlap_area(conjugate_by_symmetry(A, sym), C0) == pytest.approx(base, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(maps)
def test_overlap_bounds(A):
    a = overlap_area(A, C0)
    assert 0 <= a <= C0**2 * min(1, abs(A.alpha) ** 2) + 1e-12


@settings(max_examples=100, deadline=None)
@given(maps, maps)
def test_clip_area_bounded_by_inputs(A, B):
    p = Square(0, C0).polygon().map(A)
    q = Square(0, C0).polygon().map(B)
    inter = clip(p, q)
    if inter is not None:
        assert inter.area <= min(p.area, q.area) + 1e-12


def test_clip_of_contained_polygon_is_itself():
    big = Square(0, 2).polygon()
    small = Square(0.1 + 0.2j, 0.5).polygon().map(AffineMap(cmath.exp(0.3j), 0))
    assert clip(small, big).area == pytest.approx(small.area, rel=1e-14)
