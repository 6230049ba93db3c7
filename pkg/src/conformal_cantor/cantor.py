"""Dynamically defined conformal Cantor sets: pieces, inverse branches, cylinders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from conformal_cantor.geometry import AffineMap, ConvexPolygon, Square, compose, separated
from conformal_cantor.symbolic import FiniteWord, Subshift

MARKOV_TOL = 1e-12


@dataclass(frozen=True)
class AffineBranch:
    map: AffineMap
    epsilon: float = 1.0
    holder: float = 0.0

    def __call__(self, z):
        return self.map.alpha * z + self.map.beta

    def derivative(self, z):
        return self.map.alpha + 0 * z

    def increment(self, p, h):
        return self.map.alpha * h

    @property
    def coefficients(self) -> tuple:
        return (self.map.alpha, self.map.beta, 0j, 0j)


@dataclass(frozen=True)
class SmoothBranch:
    """Black-box holomorphic branch with derivative oracle and Hölder data of the derivative."""

    func: Callable
    deriv: Callable
    epsilon: float = 1.0
    holder: float = 0.0
    incr: Callable | None = None
    coefficients: tuple | None = None

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError("Hölder exponent must lie in (0, 1]")
        if self.holder < 0:
            raise ValueError("Hölder constant must be non-negative")

    def __call__(self, z):
        return self.func(z)

    def derivative(self, z):
        return self.deriv(z)

    def increment(self, p, h):
        """f(p + h) - f(p), without cancellation when a closed form is known."""
        if self.incr is not None:
            return self.incr(p, h)
        return self.func(p + h) - self.func(p)


def quadratic_branch(alpha: complex, beta: complex, eta: complex, center: complex) -> SmoothBranch:
    """z -> alpha*z + beta + eta*(z - center)**2."""
    alpha, beta, eta, center = complex(alpha), complex(beta), complex(eta), complex(center)

    def func(z):
        return alpha * z + beta + eta * (z - center) ** 2

    def deriv(z):
        return alpha + 2 * eta * (z - center)

    def incr(p, h):
        return alpha * h + eta * h * (2 * (p - center) + h)

    return SmoothBranch(func, deriv, 1.0, 2 * abs(eta), incr, (alpha, beta, eta, center))


Branch = AffineBranch | SmoothBranch


@dataclass(frozen=True)
class Piece:
    letter: object
    region: Square | ConvexPolygon
    base_point: complex

    @property
    def polygon(self) -> ConvexPolygon:
        return self.region.polygon() if isinstance(self.region, Square) else self.region

    @property
    def diameter(self) -> float:
        return self.polygon.diameter


class CantorSystem:
    """Alphabet, transitions, pieces G(a) with base points, and inverse branches f_(a,b)."""

    def __init__(
        self,
        subshift: Subshift,
        pieces: Mapping,
        branches: Mapping,
        mu: float,
        *,
        markov_slack: float = 0.0,
        validate: bool = True,
    ) -> None:
        self.subshift = subshift
        self.pieces = dict(pieces)
        self.branches = dict(branches)
        self.mu = float(mu)
        self.markov_slack = float(markov_slack)
        if validate:
            problems = self.check()
            if problems:
                raise ValueError("invalid Cantor system: " + "; ".join(problems))

    @property
    def alphabet(self):
        return self.subshift.alphabet

    @property
    def letters(self) -> tuple:
        return self.subshift.alphabet.letters

    @property
    def is_affine(self) -> bool:
        return all(isinstance(b, AffineBranch) for b in self.branches.values())

    @property
    def epsilon(self) -> float:
        return min(b.epsilon for b in self.branches.values())

    def base_point(self, letter) -> complex:
        return self.pieces[letter].base_point

    def branch(self, a, b) -> Branch:
        try:
            return self.branches[(a, b)]
        except KeyError:
            raise ValueError(f"inadmissible transition {(a, b)!r}") from None

    def max_piece_diameter(self) -> float:
        return max(p.diameter for p in self.pieces.values())

    def check(self) -> list:
        """Construction invariants; returns a list of violation messages."""
        problems = []
        if not self.mu > 1:
            problems.append(f"expansion bound mu={self.mu} must exceed 1")
        if not self.subshift.is_mixing():
            problems.append("transition set is not topologically mixing")
        for letter in self.letters:
            if letter not in self.pieces:
                problems.append(f"no piece for letter {letter!r}")
        for pair in self.subshift.transitions.pairs:
            if pair not in self.branches:
                problems.append(f"no branch for admissible pair {pair!r}")
        for pair in self.branches:
            if pair not in self.subshift.transitions:
                problems.append(f"branch given for inadmissible pair {pair!r}")
        if problems:
            return problems
        for letter, piece in self.pieces.items():
            if not piece.polygon.contains(piece.base_point, 1e-12):
                problems.append(f"base point of {letter!r} lies outside its piece")
        letters = list(self.pieces)
        for i, a in enumerate(letters):
            for b in letters[i + 1:]:
                if not separated(self.pieces[a].polygon, self.pieces[b].polygon):
                    problems.append(f"pieces {a!r} and {b!r} are not disjoint")
        for (a, b), br in self.branches.items():
            img, radius = _branch_image(br, self.pieces[b].polygon)
            slack = self.markov_slack + MARKOV_TOL + radius
            if not self.pieces[a].polygon.contains_polygon(img, slack):
                problems.append(f"Markov property fails: f_{(a, b)!r}(G({b!r})) is not inside G({a!r})")
            sup = _sup_derivative(br, self.pieces[b].polygon)
            if sup > 1 / self.mu * (1 + 1e-12):
                problems.append(
                    f"expansion fails on branch {(a, b)!r}: sup|Df|={sup:.6g} > 1/mu={1 / self.mu:.6g}"
                )
        return problems

    def tables(self) -> dict | None:
        """Letter-indexed coefficient arrays when every branch is affine or quadratic."""
        n = len(self.letters)
        alpha = np.zeros((n, n), complex)
        beta = np.zeros((n, n), complex)
        eta = np.zeros((n, n), complex)
        center = np.zeros((n, n), complex)
        valid = np.zeros((n, n), bool)
        for (a, b), br in self.branches.items():
            if br.coefficients is None:
                return None
            i, j = self.alphabet.index(a), self.alphabet.index(b)
            alpha[i, j], beta[i, j], eta[i, j], center[i, j] = br.coefficients
            valid[i, j] = True
        base = np.array([self.base_point(a) for a in self.letters], complex)
        return {"alpha": alpha, "beta": beta, "eta": eta, "center": center, "valid": valid, "base": base}


def _grid(poly: ConvexPolygon, k: int = 5) -> tuple:
    """Vertex+center sample grid over the bounding box clipped to the polygon, and its spacing."""
    x0, x1, y0, y1 = poly.bounds()
    xs, ys = np.linspace(x0, x1, k), np.linspace(y0, y1, k)
    pts = [complex(x, y) for x in xs for y in ys]
    pts = [p for p in pts if poly.contains(p, 1e-12)] + list(poly.vertices) + [poly.centroid]
    spacing = max(x1 - x0, y1 - y0) / (k - 1)
    return np.array(pts), spacing


def _sup_derivative(br: Branch, poly: ConvexPolygon) -> float:
    if isinstance(br, AffineBranch):
        return abs(br.map.alpha)
    pts, spacing = _grid(poly)
    # every point of the piece is within spacing/sqrt(2) of a grid node
    return float(np.abs(br.derivative(pts)).max()) + br.holder * (spacing / math.sqrt(2)) ** br.epsilon


def _convex_hull(points) -> list:
    pts = sorted(set((p.real, p.imag) for p in points))
    if len(pts) <= 2:
        return [complex(*p) for p in pts]

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and turn(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and turn(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return [complex(*p) for p in lower[:-1] + upper[:-1]]


def _branch_image(br: Branch, poly: ConvexPolygon, radius: float = 0.0) -> tuple:
    """Polygon of vertex images plus an inflation radius covering the true image."""
    if isinstance(br, AffineBranch):
        return poly.map(br.map), abs(br.map.alpha) * radius
    verts = np.array(poly.vertices)
    img = br(verts)
    longest = max(abs(b - a) for a, b in poly.edges())
    bend = br.holder * longest ** (1 + br.epsilon)
    lip = _sup_derivative(br, poly)
    return ConvexPolygon(tuple(_convex_hull(list(img)))), lip * radius + bend


class ComposedMap:
    """f_a = f_(a0,a1) o ... o f_(a_{n-1},a_n) for a non-affine system."""

    def __init__(self, branches: list) -> None:
        # application order: innermost first
        self.chain = list(reversed(branches))

    def __call__(self, z):
        for br in self.chain:
            z = br(z)
        return z

    def derivative(self, z):
        d = 1 + 0 * z
        for br in self.chain:
            d = d * br.derivative(z)
            z = br(z)
        return d

    def increment(self, p, h):
        for br in self.chain:
            h, p = br.increment(p, h), br(p)
        return h


def _check_word(sys: CantorSystem, word: FiniteWord) -> None:
    sys.subshift.check(word.symbols)


def branch_word(sys: CantorSystem, word: FiniteWord):
    """The composed inverse branch f_a; an AffineMap for affine systems."""
    _check_word(sys, word)
    branches = [sys.branch(a, b) for a, b in word.pairs()]
    if all(isinstance(b, AffineBranch) for b in branches):
        out = AffineMap.identity()
        for br in branches:
            out = compose(out, br.map)
        return out
    return ComposedMap(branches)


def cylinder_bound(sys: CantorSystem, word: FiniteWord) -> tuple:
    """(polygon, inflation radius) whose inflation contains G(a)."""
    _check_word(sys, word)
    f = branch_word(sys, word)
    poly = sys.pieces[word.last].polygon
    if isinstance(f, AffineMap):
        return poly.map(f), 0.0
    radius = 0.0
    for a, b in reversed(list(word.pairs())):
        poly, radius = _branch_image(sys.branch(a, b), poly, radius)
    return poly, radius


def cylinder(sys: CantorSystem, word: FiniteWord) -> ConvexPolygon:
    return cylinder_bound(sys, word)[0]


def cylinder_diam(sys: CantorSystem, word: FiniteWord) -> float:
    poly, radius = cylinder_bound(sys, word)
    return poly.diameter + 2 * radius


def diameter_bound(sys: CantorSystem, size: int) -> float:
    """C * mu^-n with C the largest piece diameter."""
    return sys.max_piece_diameter() * sys.mu ** (-size)


def distortion_ratio(sys: CantorSystem, word: FiniteWord, p1: complex, p2: complex) -> float:
    poly = sys.pieces[word.last].polygon
    for p in (p1, p2):
        if not poly.contains(p, 1e-12):
            raise ValueError(f"point {p} lies outside the terminal piece G({word.last!r})")
    f = branch_word(sys, word)
    if isinstance(f, AffineMap):
        return 1.0
    return float(abs(f.derivative(complex(p1))) / abs(f.derivative(complex(p2))))


def distortion_bound(sys: CantorSystem) -> float:
    """Word-independent C with C^-1 <= |Df(x)|/|Df(y)| <= C, from the Hölder data."""
    worst = 0.0
    for (a, b), br in sys.branches.items():
        if isinstance(br, AffineBranch):
            continue
        pts, _ = _grid(sys.pieces[b].polygon)
        low = float(np.abs(br.derivative(pts)).min())
        worst = max(worst, br.holder / max(low, 1e-300))
    if worst == 0.0:
        return 1.0
    eps = sys.epsilon
    d = sys.max_piece_diameter()
    return math.exp(worst * d ** eps / (1 - sys.mu ** (-eps)))


# ---- Buzzard's example ------------------------------------------------------------------

BUZZARD_LETTERS = tuple(range(9))


def buzzard_point(letter: int) -> complex:
    return complex(letter % 3 - 1, letter // 3 - 1)


def buzzard_letter(point: complex) -> int:
    x, y = int(round(point.real)), int(round(point.imag))
    if abs(point - complex(x, y)) > 1e-12 or not (-1 <= x <= 1 and -1 <= y <= 1):
        raise ValueError(f"{point} is not a point of the Buzzard alphabet")
    return (x + 1) + 3 * (y + 1)


def covering_ok(c0: float, c1: float) -> bool:
    """g_a(S(a;c0)) = S(0; 3c0/c1) must cover the union of the 9 pieces."""
    return c1 < 3 * c0 / (2 + c0)


def buzzard_system(c0: float, c1: float, base_points: Mapping | None = None, validate: bool = True) -> CantorSystem:
    """Nine pieces S(a;c0); branches f_(a,b)(z) = (c1/3)z + a."""
    c = c1 / 3
    sub = Subshift.full(BUZZARD_LETTERS)
    bp = dict(base_points or {})
    pieces = {
        k: Piece(k, Square(buzzard_point(k), c0), complex(bp.get(k, buzzard_point(k))))
        for k in BUZZARD_LETTERS
    }
    branches = {(a, b): AffineBranch(AffineMap(c, buzzard_point(a))) for a in BUZZARD_LETTERS for b in BUZZARD_LETTERS}
    return CantorSystem(sub, pieces, branches, mu=3 / c1, validate=validate)


def perturbed_buzzard(c0: float, c1: float, eta: float, seed: int | None = None, validate: bool = True) -> CantorSystem:
    """f_(a,b)(z) = (c1/3)z + a + eta_ab (z - b)^2 with |eta_ab| = eta.

    The bump vanishes at the piece centre, so the base points c_a = a stay in the set.
    With a seed, each branch gets an independent random phase and modulus in [eta/2, eta].
    """
    c = c1 / 3
    rng = np.random.default_rng(seed) if seed is not None else None
    sub = Subshift.full(BUZZARD_LETTERS)
    pieces = {k: Piece(k, Square(buzzard_point(k), c0), buzzard_point(k)) for k in BUZZARD_LETTERS}
    branches = {}
    for a in BUZZARD_LETTERS:
        for b in BUZZARD_LETTERS:
            if rng is None:
                e = complex(eta)
            else:
                e = eta * rng.uniform(0.5, 1.0) * np.exp(2j * np.pi * rng.uniform())
            branches[(a, b)] = quadratic_branch(c, buzzard_point(a), e, buzzard_point(b))
    half_diag = c0 / math.sqrt(2)
    sup = max(_sup_derivative(br, pieces[b].polygon) for (a, b), br in branches.items())
    mu = 1 / sup / (1 + 1e-9)
    return CantorSystem(sub, pieces, branches, mu, markov_slack=eta * half_diag**2 * 1.01, validate=validate)
