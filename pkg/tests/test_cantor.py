import itertools
import math

import numpy as np
import pytest

from conformal_cantor.cantor import (
    AffineBranch,
    CantorSystem,
    Piece,
    branch_word,
    buzzard_letter,
    buzzard_point,
    buzzard_system,
    covering_ok,
    cylinder,
    cylinder_bound,
    cylinder_diam,
    diameter_bound,
    distortion_bound,
    distortion_ratio,
    perturbed_buzzard,
)
from conformal_cantor.geometry import AffineMap, Square, compose
from conformal_cantor.symbolic import FiniteWord, Subshift

DELTA = 7e-8
C0 = 1 - DELTA
C1 = 3 * C0 / (2 + C0) * (1 - 1e-9)
C = C1 / 3
CENTER = 4  # the letter whose point is 0


@pytest.fixture(scope="module")
def buzz():
    return buzzard_system(C0, C1)


@pytest.fixture(scope="module")
def pert():
    return perturbed_buzzard(C0, C1, 1e-3)


def same_square(poly, center, side, tol=1e-14):
    ref = Square(center, side).vertices
    return max(abs(a - b) for a, b in zip(poly.vertices, ref)) <= tol


def test_letter_encoding():
    assert buzzard_point(0) == -1 - 1j
    assert buzzard_point(CENTER) == 0
    assert buzzard_point(8) == 1 + 1j
    assert all(buzzard_letter(buzzard_point(k)) == k for k in range(9))


def test_size_zero_cylinder_is_piece(buzz):
    assert same_square(cylinder(buzz, FiniteWord((CENTER,))), 0, C0)
    assert same_square(cylinder(buzz, FiniteWord((2,))), buzzard_point(2), C0)


def test_centre_centre_cylinder(buzz):
    assert same_square(cylinder(buzz, FiniteWord((CENTER, CENTER))), 0, C * C0)


def test_two_letter_cylinders(buzz):
    for a, b in itertools.product(range(9), repeat=2):
        centre = C * buzzard_point(b) + buzzard_point(a)
        assert same_square(cylinder(buzz, FiniteWord((a, b))), centre, C * C0)


def test_cylinder_diameters(buzz):
    for n in range(6):
        w = FiniteWord(tuple(np.random.default_rng(n).integers(0, 9, n + 1)))
        assert cylinder_diam(buzz, w) == pytest.approx(C0 * math.sqrt(2) * C**n, rel=1e-12)
        assert cylinder_diam(buzz, w) <= diameter_bound(buzz, n) * (1 + 1e-12)
    ratios = [
        cylinder_diam(buzz, FiniteWord((3,) * (n + 2))) / cylinder_diam(buzz, FiniteWord((3,) * (n + 1)))
        for n in range(5)
    ]
    np.testing.assert_allclose(ratios, C, rtol=1e-12)


def test_branch_words(buzz):
    for a, b in [(0, 5), (CENTER, 8), (7, 7)]:
        f = branch_word(buzz, FiniteWord((a, b)))
        assert f.distance(AffineMap(C, buzzard_point(a))) < 1e-15
    assert branch_word(buzz, FiniteWord((2,))).distance(AffineMap.identity()) == 0
    # points 0 -> 1 -> -1: f_(4,5) o f_(5,3) = c(cz + 1) + 0
    f = branch_word(buzz, FiniteWord((4, 5, 3)))
    expected = AffineMap(C * C, C)
    assert f.distance(expected) < 1e-15
    assert f.distance(compose(buzz.branch(4, 5).map, buzz.branch(5, 3).map)) == 0


def test_branch_word_concat_law(buzz):
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = tuple(rng.integers(0, 9, 3))
        v = (u[-1],) + tuple(rng.integers(0, 9, 2))
        lhs = branch_word(buzz, FiniteWord(u + v[1:]))
        rhs = compose(branch_word(buzz, FiniteWord(u)), branch_word(buzz, FiniteWord(v)))
        assert lhs.distance(rhs) < 1e-15


def test_nesting(buzz, pert):
    rng = np.random.default_rng(2)
    for sysm in (buzz, pert):
        for _ in range(10):
            w = tuple(rng.integers(0, 9, 4))
            outer, r_out = cylinder_bound(sysm, FiniteWord(w[:-1]))
            inner, r_in = cylinder_bound(sysm, FiniteWord(w))
            assert outer.contains_polygon(inner, r_out + r_in + 1e-12)


def test_markov_and_validation(buzz, pert):
    assert buzz.check() == []
    assert pert.check() == []


def test_inadmissible_word_raises():
    sub = Subshift.full(["a", "b"])
    sub = Subshift(sub.alphabet, type(sub.transitions)({("a", "a"), ("a", "b"), ("b", "a")}))
    pieces = {"a": Piece("a", Square(-1, 1), -1), "b": Piece("b", Square(1, 1), 1)}
    branches = {
        ("a", "a"): AffineBranch(AffineMap(0.3, -1)),
        ("a", "b"): AffineBranch(AffineMap(0.3, -1)),
        ("b", "a"): AffineBranch(AffineMap(0.3, 1)),
    }
    sysm = CantorSystem(sub, pieces, branches, mu=3)
    with pytest.raises(ValueError):
        cylinder(sysm, FiniteWord(("a", "b", "b")))


def test_markov_violation_detected():
    sub = Subshift.full([0, 1])
    pieces = {0: Piece(0, Square(-1, 1), -1), 1: Piece(1, Square(1, 1), 1)}
    branches = {(a, b): AffineBranch(AffineMap(0.3, 2 * a - 1.4)) for a in (0, 1) for b in (0, 1)}
    with pytest.raises(ValueError, match="Markov"):
        CantorSystem(sub, pieces, branches, mu=3)


def test_expansion_violation_detected():
    with pytest.raises(ValueError, match="expansion"):
        CantorSystem(buzzard_system(C0, C1).subshift, buzzard_system(C0, C1).pieces,
                     buzzard_system(C0, C1).branches, mu=3.5)


def test_covering_condition():
    assert covering_ok(C0, C1)
    assert not covering_ok(C0, 3 * C0 / (2 + C0))


def test_affine_distortion_is_one(buzz):
    w = FiniteWord((1, 2, 3))
    assert distortion_ratio(buzz, w, buzzard_point(3), buzzard_point(3) + 0.2) == 1.0
    assert distortion_ratio(buzz, w, buzzard_point(3), buzzard_point(3)) == 1.0


def test_perturbed_distortion_within_bound(pert):
    bound = distortion_bound(pert)
    assert 1 < bound < 1.1
    rng = np.random.default_rng(4)
    for _ in range(20):
        w = FiniteWord(tuple(rng.integers(0, 9, 6)))
        base = buzzard_point(w.last)
        p1, p2 = base + 0.49 * C0 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1)), base - 0.49 * C0
        r = distortion_ratio(pert, w, p1, p2)
        assert 1 / bound <= r <= bound
        assert distortion_ratio(pert, w, p1, p1) == 1.0


def test_distortion_outside_piece_rejected(pert):
    with pytest.raises(ValueError):
        distortion_ratio(pert, FiniteWord((0, 1)), buzzard_point(1), 5.0)


def test_perturbed_branches_chain_rule(pert):
    """Derivative of a composed branch equals the product of branch derivatives (chain rule)."""
    w = FiniteWord((2, 5, 7, 1))
    z = buzzard_point(1) + 0.1 - 0.2j
    f = branch_word(pert, w)
    d = 1
    x = z
    for a, b in reversed(list(w.pairs())):
        br = pert.branch(a, b)
        d *= br.derivative(x)
        x = br(x)
    assert abs(complex(f(z)) - x) < 1e-15
    assert abs(complex(f.derivative(z)) - d) < 1e-15


def test_perturbed_base_points_stay_fixed():
    s = perturbed_buzzard(C0, C1, 1e-3, seed=3)
    for a, b in itertools.product(range(9), repeat=2):
        assert abs(s.branch(a, b)(buzzard_point(b)) - (C * buzzard_point(b) + buzzard_point(a))) < 1e-15
