"""Buzzard's piecewise-affine horseshoe on C^2 and its unstable slice."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from conformal_cantor.cantor import BUZZARD_LETTERS, buzzard_point, covering_ok
from conformal_cantor.certificate import BuzzardParams
from conformal_cantor.geometry import Square


@dataclass(frozen=True)
class C2Point:
    z: complex
    w: complex

    def __post_init__(self) -> None:
        for v in (self.z, self.w):
            if not (abs(complex(v).real) < float("inf") and abs(complex(v).imag) < float("inf")):
                raise ValueError("C2Point coordinates must be finite")


class HorseshoeMap:
    """F(z, w) = (c z + b, (w - b)/c) on the component S(a;c0) x S(b;c0), c = c1/3."""

    def __init__(self, params: BuzzardParams) -> None:
        if not (0 < params.c0 < params.c1):
            raise ValueError("need 0 < c0 < c1")
        if not covering_ok(params.c0, params.c1):
            raise ValueError("covering condition c1 < 3c0/(2+c0) violated")
        self.params = params
        self.c0 = params.c0
        self.c = params.c1 / 3

    def component(self, z: complex) -> int | None:
        """Letter of the closed square S(a;c0) containing z, if any."""
        x, y = round(z.real), round(z.imag)
        if abs(x) > 1 or abs(y) > 1:
            return None
        a = complex(x, y)
        if max(abs(z.real - a.real), abs(z.imag - a.imag)) <= self.c0 / 2:
            return int((x + 1) + 3 * (y + 1))
        return None

    def expansion(self) -> float:
        return 1 / self.c


def apply_F(F: HorseshoeMap, p: C2Point) -> C2Point | None:
    """Image of p, or None when p lies outside K1."""
    a, b = F.component(p.z), F.component(p.w)
    if a is None or b is None:
        return None
    pb = buzzard_point(b)
    return C2Point(F.c * p.z + pb, (p.w - pb) / F.c)


def apply_F_inverse(F: HorseshoeMap, p: C2Point) -> C2Point | None:
    """Preimage inside K1, or None. The component (a, b) of the preimage has b = component of p.z."""
    b = F.component(p.z)
    if b is None:
        return None
    pb = buzzard_point(b)
    q = C2Point((p.z - pb) / F.c, F.c * p.w + pb)
    if F.component(q.z) is None or F.component(q.w) != b:
        return None
    return q


@dataclass(frozen=True)
class Box:
    """Product box z-square x w-square with itinerary sigma_{-past}..sigma_{depth+1}."""

    z: Square
    w: Square
    itinerary: tuple
    past: int

    @property
    def diameters(self) -> tuple:
        return self.z.diameter, self.w.diameter


def _nested_center(F: HorseshoeMap, letters) -> complex:
    """letters[0] + c letters[1] + c^2 letters[2] + ..."""
    out = 0j
    for k in reversed(letters):
        out = F.c * out + buzzard_point(k)
    return out


def approximate_lambda(F: HorseshoeMap, depth: int, past: int = 0) -> list:
    """Boxes covering the points of K1 whose next `depth` forward iterates (and `past` backward
    iterates) stay in K1, one per admissible itinerary.

    The component of F^n(p) is (sigma_n, sigma_{n+1}); the w-side is refined by the forward
    letters and the z-side by the backward ones, so there are 9^(depth + past + 2) boxes.
    """
    if depth < 0 or past < 0:
        raise ValueError("depth and past must be non-negative")
    n = len(BUZZARD_LETTERS)
    out = []
    for sig in itertools.product(range(n), repeat=depth + past + 2):
        back = sig[: past + 1][::-1]  # sigma_0, sigma_-1, ...
        fwd = sig[past + 1 :]  # sigma_1 .. sigma_{depth+1}
        zs = Square(_nested_center(F, back), F.c**past * F.c0)
        ws = Square(_nested_center(F, fwd), F.c**depth * F.c0)
        out.append(Box(zs, ws, sig, past))
    return out


def unstable_slice_cantor(F: HorseshoeMap, depth: int) -> list:
    """w-squares of the depth-`depth` boxes that meet {z = 0}."""
    return [b.w for b in approximate_lambda(F, depth) if b.z.contains(0j)]
