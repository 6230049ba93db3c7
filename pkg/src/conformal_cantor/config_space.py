"""Relative configurations of limit geometries, renormalization, and intersection search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from conformal_cantor.cantor import CantorSystem, _convex_hull, branch_word, cylinder_bound
from conformal_cantor.geometry import (
    AffineMap,
    ConvexPolygon,
    clip,
    clip_points,
    compose,
    invert,
    separated,
)
from conformal_cantor.limits import NormalizedIterate, limit_geometry, transition_affine
from conformal_cantor.symbolic import FiniteWord, NegSequence


@dataclass(frozen=True)
class AffineLimitConfig:
    theta: NegSequence
    map: AffineMap


@dataclass(frozen=True)
class RelativeConfig:
    """The class of (A o k^theta, A' o k^theta') normalized so that A = Id."""

    left_theta: NegSequence
    right_theta: NegSequence
    right_map: AffineMap

    @classmethod
    def from_pair(cls, left: AffineLimitConfig, right: AffineLimitConfig) -> "RelativeConfig":
        return cls(left.theta, right.theta, compose(invert(left.map), right.map))


def renormalize(
    sys: CantorSystem,
    sys_r: CantorSystem,
    rc: RelativeConfig,
    left_letter=None,
    right_letter=None,
    tol: float = 1e-10,
) -> RelativeConfig:
    if left_letter is None and right_letter is None:
        raise ValueError("renormalize needs at least one letter")
    left_theta, right_theta = rc.left_theta, rc.right_theta
    f_left = f_right = AffineMap.identity()
    if left_letter is not None:
        f_left = transition_affine(sys, left_theta, left_letter, tol).map
        left_theta = left_theta.append(left_letter)
    if right_letter is not None:
        f_right = transition_affine(sys_r, right_theta, right_letter, tol).map
        right_theta = right_theta.append(right_letter)
    return RelativeConfig(left_theta, right_theta, compose(invert(f_left), compose(rc.right_map, f_right)))


class _Side:
    """Images k^theta(G(u)) under an outer affine map, exact for affine systems."""

    def __init__(self, sys: CantorSystem, theta: NegSequence, outer: AffineMap, tol: float) -> None:
        self.sys = sys
        self.theta = theta
        self.outer = outer
        self.limit: NormalizedIterate = limit_geometry(sys, theta, tol)

    def root_map(self) -> AffineMap | None:
        if self.limit.exact is None:
            return None
        return compose(self.outer, self.limit.exact)

    def image(self, word: FiniteWord, affine: AffineMap | None = None) -> tuple:
        """(polygon, radius) containing outer(k^theta(G(word)))."""
        if affine is not None:
            return self.sys.pieces[word.last].polygon.map(affine), 0.0
        poly, rad = cylinder_bound(self.sys, word)
        k = self.limit
        verts = np.array(poly.vertices)
        img = self.outer(k(verts))
        lip = float(np.abs(k.derivative(verts)).max()) * 1.01 * abs(self.outer.alpha)
        bend = max(br.holder for br in self.sys.branches.values()) * poly.diameter**2 * lip
        radius = lip * rad + abs(self.outer.alpha) * k.error_radius + bend
        return ConvexPolygon(tuple(_convex_hull(list(img)))), radius


def _sides(sys, sys_r, rc, tol):
    return _Side(sys, rc.left_theta, AffineMap.identity(), tol), _Side(sys_r, rc.right_theta, rc.right_map, tol)


def _linked(a: tuple, b: tuple) -> bool:
    return not separated(a[0], b[0], a[1] + b[1])


def is_linked(sys: CantorSystem, sys_r: CantorSystem, rc: RelativeConfig, tol: float = 1e-10) -> bool:
    left, right = _sides(sys, sys_r, rc, tol)
    return _linked(
        left.image(FiniteWord((rc.left_theta.last,)), left.root_map()),
        right.image(FiniteWord((rc.right_theta.last,)), right.root_map()),
    )


def overlap(sys: CantorSystem, sys_r: CantorSystem, rc: RelativeConfig, tol: float = 1e-10) -> float:
    """Area shared by the two piece images (0 for contact-only or disjoint)."""
    left, right = _sides(sys, sys_r, rc, tol)
    lp = left.image(FiniteWord((rc.left_theta.last,)), left.root_map())[0]
    rp = right.image(FiniteWord((rc.right_theta.last,)), right.root_map())[0]
    inter = clip(lp, rp)
    return 0.0 if inter is None else inter.area


@dataclass(frozen=True)
class SearchResult:
    status: str  # "witness", "exhausted" or "budget"
    point: complex | None
    left_word: FiniteWord | None
    right_word: FiniteWord | None
    certified_depth: int | None
    nodes: int
    pruned: int
    deepest: tuple

    @property
    def found(self) -> bool:
        return self.status == "witness"


def search_intersection(
    sys: CantorSystem,
    sys_r: CantorSystem,
    rc: RelativeConfig,
    max_depth: int,
    max_nodes: int = 2_000_000,
    tol: float = 1e-10,
) -> SearchResult:
    """Depth-first balanced renormalization with linked-pruning.

    At each node the side whose current image has the larger diameter is refined (ties refine
    the left). Children that stay linked are explored in order of decreasing overlap area,
    then increasing distance between image centres, then alphabet order. A witness is returned
    once both words reach size `max_depth`; if every branch dies the result certifies that no
    linked pair of words of size `certified_depth` exists.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    left, right = _sides(sys, sys_r, rc, tol)
    lm0, rm0 = left.root_map(), right.root_map()
    u0 = FiniteWord((rc.left_theta.last,))
    v0 = FiniteWord((rc.right_theta.last,))
    root = (u0, lm0, left.image(u0, lm0), v0, rm0, right.image(v0, rm0))
    if not _linked(root[2], root[5]):
        return SearchResult("exhausted", None, None, None, 0, 1, 1, (u0, v0))
    stack = [root]
    nodes = 1
    pruned = 0
    died_at = 0
    deepest = (u0, v0)
    letters = {a: i for i, a in enumerate(sys.letters)}
    letters_r = {a: i for i, a in enumerate(sys_r.letters)}
    while stack:
        u, lm, limg, v, rm, rimg = stack.pop()
        if min(u.size, v.size) > min(deepest[0].size, deepest[1].size):
            deepest = (u, v)
        if u.size >= max_depth and v.size >= max_depth:
            pts = clip_points(limg[0], rimg[0])
            point = complex(np.mean(pts)) if pts else (limg[0].centroid + rimg[0].centroid) / 2
            return SearchResult("witness", point, u, v, None, nodes, pruned, (u, v))
        if nodes >= max_nodes:
            return SearchResult("budget", None, None, None, None, nodes, pruned, deepest)
        ldiam = limg[0].diameter + 2 * limg[1]
        rdiam = rimg[0].diameter + 2 * rimg[1]
        refine_left = (ldiam >= rdiam and u.size < max_depth) or v.size >= max_depth
        children = []
        if refine_left:
            for b in sys.subshift.successors(u.last):
                w = FiniteWord(u.symbols + (b,))
                m = compose(lm, sys.branch(u.last, b).map) if lm is not None else None
                img = left.image(w, m)
                children.append((letters[b], (w, m, img, v, rm, rimg)))
        else:
            for b in sys_r.subshift.successors(v.last):
                w = FiniteWord(v.symbols + (b,))
                m = compose(rm, sys_r.branch(v.last, b).map) if rm is not None else None
                img = right.image(w, m)
                children.append((letters_r[b], (u, lm, limg, w, m, img)))
        ranked = []
        for idx, child in children:
            nodes += 1
            ci, cr = child[2], child[5]
            if not _linked(ci, cr):
                pruned += 1
                died_at = max(died_at, child[0].size, child[3].size)
                continue
            inter = clip(ci[0], cr[0])
            area = 0.0 if inter is None else inter.area
            # quantised so roundoff cannot break ties between equal overlaps
            share = round(area / (ci[0].area + cr[0].area), 9)
            ranked.append(((-share, abs(ci[0].centroid - cr[0].centroid), idx), child))
        if not ranked:
            died_at = max(died_at, u.size + refine_left, v.size + (not refine_left))
        ranked.sort(key=lambda item: item[0])
        stack.extend(child for _, child in reversed(ranked))
    return SearchResult("exhausted", None, None, None, died_at, nodes, pruned, deepest)
