"""Deterministic SVG figures: cylinders, the unstable slice, and the certificate diagram."""

from __future__ import annotations

import itertools
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle, FancyArrowPatch, Polygon, Rectangle, Wedge  # noqa: E402

from conformal_cantor.cantor import CantorSystem, cylinder  # noqa: E402
from conformal_cantor.symbolic import FiniteWord  # noqa: E402

STYLE = {"svg.hashsalt": "conformal-cantor", "svg.fonttype": "none", "path.simplify": False}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _square_patch(sq, gid: str, **kw):
    h = sq.side / 2
    r = Rectangle((sq.center.real - h, sq.center.imag - h), sq.side, sq.side, **kw)
    r.set_gid(gid)
    return r


def render_cylinders(system: CantorSystem, depth: int, path) -> int:
    """Every cylinder of size `depth`; returns the number drawn."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 6))
        n = 0
        letters = system.letters
        for start in letters:
            stack = [(start,)]
            while stack:
                w = stack.pop()
                if len(w) == depth + 1:
                    poly = cylinder(system, FiniteWord(w))
                    p = Polygon(np.column_stack([np.real(poly.vertices), np.imag(poly.vertices)]),
                                closed=True, facecolor="0.35", edgecolor="none")
                    p.set_gid(f"cyl-{n}")
                    ax.add_patch(p)
                    n += 1
                    continue
                stack.extend(w + (b,) for b in reversed(system.subshift.successors(w[-1])))
        for letter in letters:
            piece = system.pieces[letter].polygon
            p = Polygon(np.column_stack([np.real(piece.vertices), np.imag(piece.vertices)]), closed=True,
                        fill=False, edgecolor="black", linewidth=0.5)
            p.set_gid(f"piece-{letter}")
            ax.add_patch(p)
        ax.set_aspect("equal")
        ax.autoscale_view()
        ax.set_title(f"cylinders of size {depth}")
        _save(fig, path)
    return n


def render_lambda_slice(squares: list, c0: float, path) -> int:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 6))
        for i, sq in enumerate(squares):
            ax.add_patch(_square_patch(sq, f"slice-{i}", facecolor="tab:blue", edgecolor="none"))
        lim = 1 + c0
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.set_title(r"$W^u_{loc}(0)\cap\Lambda$ in the $w$-plane")
        _save(fig, path)
    return len(squares)


def _contour_field(params, n_r: int = 24, n_phi: int = 48, n_dir: int = 8):
    """Mean threshold-contour radius in beta over a polar alpha grid."""
    from conformal_cantor.certificate import _contour_radius, _thresholds

    lo, hi = 0.5 * math.log(params.c_prime), -0.5 * math.log(params.c_prime)
    r_edges = np.exp(np.linspace(lo, hi, n_r + 1))
    p_edges = np.linspace(0, 2 * math.pi, n_phi + 1)
    rc = np.sqrt(r_edges[:-1] * r_edges[1:])
    pc = (p_edges[:-1] + p_edges[1:]) / 2
    R, P, D = np.meshgrid(rc, pc, np.arange(n_dir) * math.pi / n_dir, indexing="ij")
    alpha = (R * np.exp(1j * P)).ravel()
    d = np.exp(1j * D).ravel()
    rho = _contour_radius(params, alpha, d, _thresholds(params, alpha), iters=30)
    return r_edges, p_edges, rho.reshape(R.shape).mean(axis=2)


def render_certificate_diagram(params, traces: dict, path) -> dict:
    """Left: the alpha-annulus with bands and threshold-contour shading. Right: sampled chains in
    (log|alpha|, -log(2 kappa)) with one arrow per renormalization step. Returns element counts."""
    counts = {"bands": 0, "arrows": 0, "shading": 0}
    with plt.rc_context(STYLE):
        fig, (ax, bx) = plt.subplots(1, 2, figsize=(12, 5.5))
        r_edges, p_edges, field = _contour_field(params)
        for i in range(len(r_edges) - 1):
            for j in range(len(p_edges) - 1):
                w = Wedge((0, 0), r_edges[i + 1], math.degrees(p_edges[j]), math.degrees(p_edges[j + 1]),
                          width=r_edges[i + 1] - r_edges[i], facecolor=plt.cm.viridis(field[i, j] / field.max()),
                          edgecolor="none")
                w.set_gid(f"shade-{i}-{j}")
                ax.add_patch(w)
                counts["shading"] += 1
        rings = [
            ("band-L-1", math.sqrt(params.c_prime), math.sqrt(params.c)),
            ("band-L0", math.sqrt(params.c), 1 / math.sqrt(params.c)),
            ("band-L1", 1 / math.sqrt(params.c), 1 / math.sqrt(params.c_prime)),
        ]
        for gid, r0, r1 in rings:
            if r1 <= r0:
                continue
            c = Circle((0, 0), r1, fill=False, edgecolor="white" if gid != "band-L1" else "black", linewidth=1.0)
            c.set_gid(gid)
            ax.add_patch(c)
            counts["bands"] += 1
        inner = Circle((0, 0), math.sqrt(params.c_prime), fill=False, edgecolor="black", linewidth=1.0)
        inner.set_gid("annulus-inner")
        ax.add_patch(inner)
        lim = 1 / math.sqrt(params.c_prime) * 1.05
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.set_xlabel(r"Re $\alpha$")
        ax.set_ylabel(r"Im $\alpha$")
        ax.set_title(r"$R_{c'}$ bands, shaded by $\beta$-extent of $X^\kappa_\alpha$")

        lc, lp = 0.5 * math.log(params.c), 0.5 * math.log(params.c_prime)
        y0, y2 = -math.log(2 * params.kappa0), -math.log(2 * params.kappa2)
        steps = [((lp, y2), (lc, y2)), ((lc, y0), (-lc, y0)), ((-lc, y2), (-lp, y2))]
        for k, ((xa, ya), (xb, yb)) in enumerate(steps):
            (line,) = bx.plot([xa, xb], [ya, yb], color="black", linewidth=1.2)
            line.set_gid(f"threshold-{k}")
        colors = itertools.cycle(plt.rcParams["axes.prop_cycle"].by_key()["color"])
        for t, trace in sorted(traces.items()):
            col = next(colors)
            pts = [(math.log(abs(a)), -math.log(2 * max(k, 1e-300))) for a, k in trace]
            for m, (p, q) in enumerate(zip(pts, pts[1:])):
                arr = FancyArrowPatch(p, q, arrowstyle="-|>", mutation_scale=8, color=col, linewidth=0.8)
                arr.set_gid(f"arrow-{t}-{m}")
                bx.add_patch(arr)
                counts["arrows"] += 1
            if pts:
                bx.plot(*zip(*pts), linestyle="none", marker=".", color=col, markersize=3)
        bx.set_xlim(lp * 1.05, -lp * 1.05)
        bx.set_ylim(0, y0 * 1.1)
        bx.set_xlabel(r"$\log|\alpha|$")
        bx.set_ylabel(r"$-\log(2\kappa)$")
        bx.set_title("renormalization chains")
        _save(fig, path)
    return counts
