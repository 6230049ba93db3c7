"""Limit geometries k^theta, transition affines F^{theta a}, and perturbation parts.

Deep compositions are evaluated base-relative: we carry the orbit p_k of the base point and
the offset h_k = f(p + h) - f(p) through each branch, so dividing by the derivative product
never magnifies roundoff from the absolute positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from conformal_cantor.cantor import AffineBranch, CantorSystem, branch_word, _convex_hull
from conformal_cantor.geometry import AffineMap, ConvexPolygon, compose, invert
from conformal_cantor.symbolic import FiniteWord, NegSequence

DEFAULT_GRID = 50


class TruncationError(ValueError):
    def __init__(self, message: str, achievable: float) -> None:
        super().__init__(message)
        self.achievable = achievable


def piece_grid(sys: CantorSystem, letter, n: int = DEFAULT_GRID) -> np.ndarray:
    """n x n grid over the bounding box of G(letter), restricted to the piece."""
    poly = sys.pieces[letter].polygon
    x0, x1, y0, y1 = poly.bounds()
    xs, ys = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    pts = (xs + 1j * ys).ravel()
    keep = np.array([poly.contains(complex(p), 1e-12) for p in pts])
    return pts[keep]


def _check_theta(sys: CantorSystem, theta: NegSequence) -> None:
    sys.subshift.check(theta.symbols)


def _orbit(sys: CantorSystem, symbols: tuple, z):
    """Push base point c and offsets z - c through f_theta_n.

    Returns (offsets at the end, derivative at the base orbit, derivative along z, end base point).
    """
    c = sys.base_point(symbols[-1])
    z = np.asarray(z, dtype=complex)
    p, h = c, z - c
    dp = 1 + 0j
    dz = np.ones_like(z)
    for k in range(len(symbols) - 1, 0, -1):
        br = sys.branch(symbols[k - 1], symbols[k])
        dz = dz * br.derivative(p + h)
        dp = dp * complex(br.derivative(p))
        h = br.increment(p, h)
        p = complex(br(p))
    return h, dp, dz, p


@dataclass(frozen=True)
class NormalizedIterate:
    """k^theta_n = Phi_theta_n o f_theta_n together with a certified distance to k^theta."""

    word_view: NegSequence
    system: CantorSystem = field(repr=False, compare=False)
    phi: AffineMap
    error_radius: float
    steps: tuple = ()
    exact: AffineMap | None = None

    @property
    def depth(self) -> int:
        return self.word_view.depth

    @property
    def map(self):
        return self.exact if self.exact is not None else self

    def __call__(self, z):
        if self.exact is not None:
            return self.exact(z)
        h, dp, _, _ = _orbit(self.system, self.word_view.symbols, z)
        return h / dp

    def derivative(self, z):
        if self.exact is not None:
            return self.exact.alpha + 0 * np.asarray(z, dtype=complex)
        _, dp, dz, _ = _orbit(self.system, self.word_view.symbols, z)
        return dz / dp

    def image_polygon(self) -> tuple:
        """(polygon, inflation) containing k^theta(G(theta_0))."""
        poly = self.system.pieces[self.word_view.last].polygon
        if self.exact is not None:
            return poly.map(self.exact), 0.0
        verts = np.array(poly.vertices)
        img = self(verts)
        longest = max(abs(b - a) for a, b in poly.edges())
        # curvature of k_n is controlled by the flattened branch derivatives
        bend = max(br.holder for br in self.system.branches.values()) * longest**2
        return ConvexPolygon(tuple(_convex_hull(list(img)))), bend + self.error_radius


def _normalizer(sys: CantorSystem, symbols: tuple) -> AffineMap:
    _, dp, _, p = _orbit(sys, symbols, np.array([sys.base_point(symbols[-1])]))
    return AffineMap(1 / dp, -p / dp)


def _contraction_ratio(sys: CantorSystem) -> float:
    return sys.mu ** (-sys.epsilon)


def limit_geometry(sys: CantorSystem, theta: NegSequence, tol: float = 1e-10, grid: int = DEFAULT_GRID) -> NormalizedIterate:
    """Deepens the normalized iterate until the tail bound falls below `tol`."""
    _check_theta(sys, theta)
    if not tol > 0:
        raise ValueError("tol must be positive")
    c = sys.base_point(theta.last)
    if sys.is_affine:
        return NormalizedIterate(theta, sys, _normalizer(sys, theta.symbols), 0.0, (), AffineMap(1, -c))
    pts = piece_grid(sys, theta.last, grid)
    rho = _contraction_ratio(sys)
    prev = pts - c
    steps = []
    radius = math.inf
    for n in range(1, theta.depth + 1):
        view = theta.view(n)
        h, dp, _, _ = _orbit(sys, view.symbols, pts)
        cur = h / dp
        step = float(np.abs(cur - prev).max())
        steps.append(step)
        radius = step * rho / (1 - rho)
        if radius <= tol:
            return NormalizedIterate(view, sys, _normalizer(sys, view.symbols), radius, tuple(steps))
        prev = cur
    if theta.depth == 0:
        radius = sys.max_piece_diameter() * rho / (1 - rho)
    raise TruncationError(
        f"truncation depth {theta.depth} reaches error radius {radius:.3e} > tol {tol:.3e}", radius
    )


def iterate_at(sys: CantorSystem, theta: NegSequence, n: int) -> NormalizedIterate:
    """k^theta_n at an explicit depth, with the tail bound from the last observed step."""
    _check_theta(sys, theta)
    view = theta.view(n)
    if sys.is_affine:
        return NormalizedIterate(view, sys, _normalizer(sys, view.symbols), 0.0, (), AffineMap(1, -sys.base_point(theta.last)))
    return NormalizedIterate(view, sys, _normalizer(sys, view.symbols), math.nan)


@dataclass(frozen=True)
class TransitionAffine:
    map: AffineMap
    source: NegSequence
    appended_letter: object
    error_radius: float = 0.0


def _transition_at(sys: CantorSystem, symbols: tuple, letter) -> AffineMap:
    theta0 = symbols[-1]
    br = sys.branch(theta0, letter)
    ca, c0 = sys.base_point(letter), sys.base_point(theta0)
    q = complex(br(ca))
    dq = complex(br.derivative(ca))
    p, h = c0, q - c0
    d_p = d_q = 1 + 0j
    for k in range(len(symbols) - 1, 0, -1):
        f = sys.branch(symbols[k - 1], symbols[k])
        d_p *= complex(f.derivative(p))
        d_q *= complex(f.derivative(p + h))
        h = complex(f.increment(p, h))
        p = complex(f(p))
    return AffineMap(d_q * dq / d_p, h / d_p)


def transition_affine(sys: CantorSystem, theta: NegSequence, letter, tol: float = 1e-10) -> TransitionAffine:
    """F with F o k^{theta a} = k^theta o f_(theta_0, a)."""
    _check_theta(sys, theta)
    if (theta.last, letter) not in sys.subshift.transitions:
        raise ValueError(f"cannot append {letter!r} after {theta.last!r}")
    if sys.is_affine:
        br = sys.branch(theta.last, letter)
        alpha = br.map.alpha
        beta = br.map(sys.base_point(letter)) - sys.base_point(theta.last)
        return TransitionAffine(AffineMap(alpha, beta), theta, letter, 0.0)
    rho = _contraction_ratio(sys)
    pts = piece_grid(sys, theta.last, 10)
    c = sys.base_point(theta.last)
    diam = sys.max_piece_diameter()
    prev_f = _transition_at(sys, theta.view(0).symbols, letter)
    prev_k = pts - c
    radius = math.inf
    for n in range(1, theta.depth + 1):
        view = theta.view(n)
        cur = _transition_at(sys, view.symbols, letter)
        h, dp, _, _ = _orbit(sys, view.symbols, pts)
        k_now = h / dp
        step = abs(cur.alpha - prev_f.alpha) * diam + abs(cur.beta - prev_f.beta)
        kstep = float(np.abs(k_now - prev_k).max())
        radius = (step + (1 + abs(cur.alpha)) * kstep) * rho / (1 - rho)
        if radius <= tol:
            return TransitionAffine(cur, theta, letter, radius)
        prev_f, prev_k = cur, k_now
    raise TruncationError(
        f"truncation depth {theta.depth} reaches transition error {radius:.3e} > tol {tol:.3e}", radius
    )


def transition_batch(tables: dict, histories: np.ndarray, letters: np.ndarray) -> tuple:
    """Vectorised F^{theta a} for affine/quadratic systems.

    histories: (N, m+1) letter indices theta_-m..theta_0; letters: (N,) appended indices.
    Returns complex arrays (alpha, beta) of F.
    """
    A, B, E, C, base = tables["alpha"], tables["beta"], tables["eta"], tables["center"], tables["base"]
    histories = np.asarray(histories)
    letters = np.asarray(letters)
    t0 = histories[:, -1]
    ca = base[letters]
    a, b, e, cn = A[t0, letters], B[t0, letters], E[t0, letters], C[t0, letters]
    q = a * ca + b + e * (ca - cn) ** 2
    dq = a + 2 * e * (ca - cn)
    p = base[t0]
    h = q - p
    d_p = np.ones(len(t0), complex)
    d_q = np.ones(len(t0), complex)
    for k in range(histories.shape[1] - 1, 0, -1):
        x, y = histories[:, k - 1], histories[:, k]
        a, b, e, cn = A[x, y], B[x, y], E[x, y], C[x, y]
        u = p - cn
        d_p = d_p * (a + 2 * e * u)
        d_q = d_q * (a + 2 * e * (u + h))
        h = a * h + e * h * (2 * u + h)
        p = a * p + b + e * u * u
    return d_q * dq / d_p, h / d_p


class PerturbationPart:
    """u -> h((k^theta)^-1(u)) on the certified domain k^theta(G(theta_0))."""

    def __init__(self, h: Callable, limit: NormalizedIterate, tol: float) -> None:
        self.h = h
        self.limit = limit
        self.tol = tol
        self.domain, self.radius = limit.image_polygon()

    def inverse_limit(self, u: complex) -> complex:
        k = self.limit
        if k.exact is not None:
            return invert(k.exact)(u)
        z = u + k.system.base_point(k.word_view.last)
        for _ in range(60):
            step = (complex(k(np.array([z]))[0]) - u) / complex(k.derivative(np.array([z]))[0])
            z -= step
            if abs(step) <= 1e-15 * max(1.0, abs(z)):
                break
        return z

    def __call__(self, u):
        u = complex(u)
        if not self.domain.contains(u, self.radius + self.tol):
            raise ValueError(f"{u} lies outside the certified domain of the perturbation part")
        return self.h(self.inverse_limit(u))


def perturbation_part(sys: CantorSystem, h: Callable, theta: NegSequence, tol: float = 1e-10) -> PerturbationPart:
    return PerturbationPart(h, limit_geometry(sys, theta, tol), tol)


def numeric_derivative(h: Callable, z: complex, step: float = 1e-6) -> complex:
    """Central difference along the real axis; equals h' for holomorphic h."""
    return (h(z + step) - h(z - step)) / (2 * step)


def scaled_renorm_flattening(
    sys: CantorSystem,
    h: Callable,
    word: FiniteWord,
    theta: NegSequence,
    dh: Callable | None = None,
    grid: int = DEFAULT_GRID,
    tol: float = 1e-10,
) -> float:
    """sup over G(a_n) of |A_{h_n}(h(f_a(z))) - k^{theta a}(z)|, with A_{h_n} the normalizer
    sending h_n(c) to 0 with unit derivative. Equivalent to the C0 distance of the scaled
    perturbation part from the identity on k^{theta a}(G(a_n))."""
    if word.first != theta.last:
        raise ValueError("word must start at the final letter of theta")
    sys.subshift.check(word.symbols)
    extended = theta
    for letter in word.symbols[1:]:
        extended = extended.append(letter)
    k = limit_geometry(sys, extended, tol, grid)
    c = sys.base_point(word.last)
    pts = piece_grid(sys, word.last, grid)
    f = branch_word(sys, word)
    if isinstance(f, AffineMap):
        p, s, df = f(c), f.alpha * (pts - c), f.alpha
    else:
        p = complex(f(c))
        s = f.increment(c, pts - c)
        df = complex(f.derivative(c))
    dhp = dh(p) if dh is not None else numeric_derivative(h, p)
    if abs(dhp) < 1e-12:
        raise ValueError(f"normalizer ill-conditioned: |h'(p)| = {abs(dhp):.3e} at the base point")
    hp = h(p)
    try:
        image = np.asarray(h(p + s), dtype=complex)
    except TypeError:
        image = np.array([h(p + d) for d in s], dtype=complex)
    values = (image - hp) / (dhp * df)
    return float(np.abs(values - k(pts)).max())
