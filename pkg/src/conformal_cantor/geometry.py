"""Planar geometry on the complex line: affine maps, convex polygons, clipping and overlap areas."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# relative tolerance used for contact and containment predicates
CONTACT_TOL = 1e-13


def cross(u: complex, v: complex) -> float:
    return u.real * v.imag - u.imag * v.real


@dataclass(frozen=True)
class AffineMap:
    """z -> alpha*z + beta."""

    alpha: complex
    beta: complex = 0j

    def __post_init__(self) -> None:
        alpha, beta = complex(self.alpha), complex(self.beta)
        if not (cmath.isfinite(alpha) and cmath.isfinite(beta)):
            raise ValueError("affine coefficients must be finite")
        if alpha == 0:
            raise ValueError("affine map has zero linear part")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(1 + 0j, 0j)

    def __call__(self, z):
        return self.alpha * z + self.beta

    def __matmul__(self, other: "AffineMap") -> "AffineMap":
        return compose(self, other)

    def inverse(self) -> "AffineMap":
        return invert(self)

    def distance(self, other: "AffineMap") -> float:
        return max(abs(self.alpha - other.alpha), abs(self.beta - other.beta))

    def __str__(self) -> str:
        return f"({_fmt(self.alpha)})*z + ({_fmt(self.beta)})"


def _fmt(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """f o g."""
    return AffineMap(f.alpha * g.alpha, f.alpha * g.beta + f.beta)


def invert(f: AffineMap) -> AffineMap:
    if f.alpha == 0:
        raise ValueError("cannot invert a map with zero linear part")
    inv = 1 / f.alpha
    return AffineMap(inv, -f.beta * inv)


def _signed_area(vertices: Sequence[complex]) -> float:
    total = 0.0
    n = len(vertices)
    for k in range(n):
        total += cross(vertices[k], vertices[(k + 1) % n])
    return total / 2


def _scale(vertices: Sequence[complex]) -> float:
    return max(1.0, max(abs(v) for v in vertices))


def _clean(vertices: Sequence[complex], tol: float) -> list:
    """Drop repeated and collinear vertices."""
    pts = list(vertices)
    out: list = []
    for p in pts:
        if not out or abs(p - out[-1]) > tol:
            out.append(p)
    while len(out) > 1 and abs(out[0] - out[-1]) <= tol:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        for k in range(len(out)):
            a, b, c = out[k - 1], out[k], out[(k + 1) % len(out)]
            if abs(cross(b - a, c - b)) <= tol * (abs(b - a) + abs(c - b)):
                del out[k]
                changed = True
                break
    return out


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple

    def __post_init__(self) -> None:
        verts = tuple(complex(v) for v in self.vertices)
        if len(verts) < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        if not all(cmath.isfinite(v) for v in verts):
            raise ValueError("polygon vertices must be finite")
        tol = CONTACT_TOL * _scale(verts)
        n = len(verts)
        for k in range(n):
            a, b, c = verts[k - 1], verts[k], verts[(k + 1) % n]
            if cross(b - a, c - b) <= tol * abs(b - a) * abs(c - b):
                raise ValueError("polygon must be strictly convex and counterclockwise")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_points(cls, points: Iterable[complex]) -> "ConvexPolygon":
        """Builds a polygon from vertices in either orientation, dropping degenerate ones."""
        pts = [complex(p) for p in points]
        if len(pts) >= 3 and _signed_area(pts) < 0:
            pts.reverse()
        return cls(tuple(_clean(pts, CONTACT_TOL * _scale(pts))))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return area(self)

    @property
    def centroid(self) -> complex:
        return sum(self.vertices) / len(self.vertices)

    @property
    def diameter(self) -> float:
        v = self.vertices
        return max(abs(p - q) for p in v for q in v)

    def edges(self) -> list:
        v = self.vertices
        return [(v[k], v[(k + 1) % len(v)]) for k in range(len(v))]

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        """Closed containment, inflated by `tol`."""
        for a, b in self.edges():
            e = b - a
            if cross(e, z - a) < -tol * abs(e):
                return False
        return True

    def contains_polygon(self, other: "ConvexPolygon", tol: float = 0.0) -> bool:
        return all(self.contains(v, tol) for v in other.vertices)

    def map(self, f: AffineMap) -> "ConvexPolygon":
        return ConvexPolygon(tuple(f(v) for v in self.vertices))

    def bounds(self) -> tuple:
        xs = [v.real for v in self.vertices]
        ys = [v.imag for v in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)


@dataclass(frozen=True)
class Square:
    """Axis-aligned square S(center; side), treated as a closed set."""

    center: complex
    side: float

    def __post_init__(self) -> None:
        if not self.side > 0:
            raise ValueError("square side must be positive")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "side", float(self.side))

    @property
    def vertices(self) -> tuple:
        h = self.side / 2
        c = self.center
        return (c + complex(-h, -h), c + complex(h, -h), c + complex(h, h), c + complex(-h, h))

    def polygon(self) -> ConvexPolygon:
        return ConvexPolygon(self.vertices)

    @property
    def diameter(self) -> float:
        return self.side * math.sqrt(2)

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        h = self.side / 2 + tol
        d = z - self.center
        return abs(d.real) <= h and abs(d.imag) <= h


def area(p: ConvexPolygon) -> float:
    return abs(_signed_area(p.vertices))


def _clip_vertices(subject: Sequence[complex], clipper: Sequence[complex], tol: float) -> list:
    """Sutherland-Hodgman; inclusive tests so touching sets keep their contact points."""
    out = list(subject)
    n = len(clipper)
    for k in range(n):
        if not out:
            break
        a, b = clipper[k], clipper[(k + 1) % n]
        e = b - a
        le = abs(e)
        src, out = out, []
        m = len(src)
        for j in range(m):
            p, q = src[j], src[(j + 1) % m]
            dp, dq = cross(e, p - a), cross(e, q - a)
            pin, qin = dp >= -tol * le, dq >= -tol * le
            if pin:
                out.append(p)
            if pin != qin and (dp - dq) != 0:
                t = dp / (dp - dq)
                if 0.0 < t < 1.0:
                    out.append(p + t * (q - p))
    return out


def clip_points(p: ConvexPolygon, q: ConvexPolygon) -> list:
    """Vertices of the closed intersection, possibly degenerate (a point or a segment)."""
    tol = CONTACT_TOL * max(_scale(p.vertices), _scale(q.vertices))
    return _clip_vertices(p.vertices, q.vertices, tol)


def clip(p: ConvexPolygon, q: ConvexPolygon) -> ConvexPolygon | None:
    """Intersection polygon, or None when empty or of zero area."""
    pts = clip_points(p, q)
    if len(pts) < 3:
        return None
    tol = CONTACT_TOL * max(_scale(p.vertices), _scale(q.vertices))
    cleaned = _clean(pts, tol)
    if len(cleaned) < 3 or abs(_signed_area(cleaned)) <= tol * tol:
        return None
    try:
        return ConvexPolygon(tuple(cleaned))
    except ValueError:
        return None


def separated(p: ConvexPolygon, q: ConvexPolygon, margin: float = 0.0) -> bool:
    """True when some edge normal of p or q separates them by more than `margin`."""
    tol = CONTACT_TOL * max(_scale(p.vertices), _scale(q.vertices))
    for poly in (p, q):
        for a, b in poly.edges():
            e = b - a
            le = abs(e)
            normal = complex(e.imag, -e.real) / le
            pa = [(v.conjugate() * normal).real for v in p.vertices]
            qa = [(v.conjugate() * normal).real for v in q.vertices]
            gap = max(min(qa) - max(pa), min(pa) - max(qa))
            if gap > margin + tol:
                return True
    return False


def contact(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Closed sets p and q meet."""
    return not separated(p, q)


def overlap_area(A: AffineMap, side: float) -> float:
    """Area of S(0;side) intersected with A(S(0;side)), by clipping."""
    if not side > 0:
        raise ValueError("side must be positive")
    sq = Square(0j, side).polygon()
    inter = clip(sq.map(A), sq)
    return 0.0 if inter is None else inter.area


_UNIT = np.array([-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j])


def _boundary_inside(E: np.ndarray, C: np.ndarray, keep_same: bool, tol: np.ndarray) -> np.ndarray:
    """Sum of x dy - y dx over the parts of E's edges lying in the convex polygon C.

    E and C are (N, 4) counterclockwise vertex arrays. Edges collinear with an edge of C
    count only when they run the same way and `keep_same` is set, so shared boundary is
    integrated once and opposite-facing contact contributes nothing.
    """
    P0 = E[:, :, None]
    P1 = np.roll(E, -1, axis=1)[:, :, None]
    Q0 = C[:, None, :]
    e = (np.roll(C, -1, axis=1) - C)[:, None, :]
    d0 = (e.real * (P0 - Q0).imag - e.imag * (P0 - Q0).real)
    d1 = (e.real * (P1 - Q0).imag - e.imag * (P1 - Q0).real)
    t = tol[:, None, None]
    collinear = (np.abs(d0) <= t) & (np.abs(d1) <= t)
    seg = P1 - P0
    same = (seg.real * e.real + seg.imag * e.imag) > 0
    excluded = collinear & ~(same & keep_same)
    live = ~collinear
    outside = live & (d0 < 0) & (d1 < 0)
    denom = np.where(d0 != d1, d0 - d1, 1.0)
    tcut = d0 / denom
    enter = live & (d0 < 0) & (d1 >= 0)
    leave = live & (d0 >= 0) & (d1 < 0)
    lo = np.where(enter, tcut, 0.0).max(axis=2)
    hi = np.where(leave, tcut, 1.0).min(axis=2)
    dead = (outside | excluded).any(axis=2) | (lo >= hi)
    a = E + lo * (np.roll(E, -1, axis=1) - E)
    b = E + hi * (np.roll(E, -1, axis=1) - E)
    contrib = a.real * b.imag - a.imag * b.real
    return np.where(dead, 0.0, contrib).sum(axis=1)


def overlap_area_batch(alpha, beta, side: float) -> np.ndarray:
    """Vectorised overlap_area for arrays of (alpha, beta), via the boundary integral of the
    intersection. Independent of the clipping path; the two are cross-checked in tests."""
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    alpha, beta = np.broadcast_arrays(alpha, beta)
    shape = alpha.shape
    a = alpha.reshape(-1, 1)
    b = beta.reshape(-1, 1)
    h = side / 2
    P = np.broadcast_to(h * _UNIT[None, :], (a.shape[0], 4))
    Q = a * (h * _UNIT[None, :]) + b
    scale = np.maximum(1.0, np.abs(Q).max(axis=1)) * max(1.0, side)
    tol = 1e-12 * scale * scale
    total = _boundary_inside(P, Q, True, tol) + _boundary_inside(Q, P, False, tol)
    return np.maximum(total / 2, 0.0).reshape(shape)


def dihedral_maps() -> list:
    """The 8 symmetries of an origin-centred axis-aligned square, as (linear, conjugate) pairs."""
    rots = [1, 1j, -1, -1j]
    return [(r, False) for r in rots] + [(r, True) for r in rots]


def conjugate_by_symmetry(A: AffineMap, sym: tuple) -> AffineMap:
    """sigma o A o sigma^-1 for a square symmetry sigma; reflections act through conj."""
    r, reflect = sym
    if not reflect:
        return AffineMap(A.alpha, r * A.beta)
    # sigma(z) = r*conj(z) with |r| = 1
    return AffineMap(A.alpha.conjugate(), r * A.beta.conjugate())
