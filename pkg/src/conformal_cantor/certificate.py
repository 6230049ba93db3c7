"""The recurrent compact set L = L^-1 u L^0 u L^1 for Buzzard's example, and its verification.

A relative configuration (Id, A) with A(z) = alpha*z + beta is scored by
kappa(A) = area(S(0;c0) n A(S(0;c0))) / (c0^2 (1 + |alpha|^2)).
The middle band sqrt(c1/3) <= |alpha| <= sqrt(3/c1) needs kappa >= kappa0; the outer bands,
out to the annulus R_{c'}, need kappa >= kappa2.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np

from conformal_cantor.cantor import BUZZARD_LETTERS, buzzard_point, perturbed_buzzard
from conformal_cantor.config_space import RelativeConfig
from conformal_cantor.geometry import AffineMap, Square, clip_points, invert, overlap_area, overlap_area_batch
from conformal_cantor.limits import transition_batch

INTERIOR_KAPPA = 1e-3  # times kappa0
INTERIOR_LOG_ALPHA = 1e-3
AREA_GUARD = 1e-9
VALIDATE_SLACK = 1e-12

POINTS = np.array([buzzard_point(k) for k in BUZZARD_LETTERS])
NLET = len(POINTS)


def lambda_max(c1: float, kappa0: float) -> float:
    """Largest growth factor allowed by (c1^2 - (1 - k))/8 >= c1^2 lambda k / 9 over k >= kappa0."""
    return 9 * (c1 * c1 - 1 + kappa0) / (8 * c1 * c1 * kappa0)


@dataclass(frozen=True)
class BuzzardParams:
    delta: float
    c0: float
    c1: float
    kappa0: float
    kappa1: float
    kappa2: float
    c_prime: float
    lambda_growth: float

    @property
    def c(self) -> float:
        return self.c1 / 3

    @classmethod
    def preset(cls, delta: float = 7e-8, kappa0: float = 1e-6, **overrides) -> "BuzzardParams":
        c0 = overrides.pop("c0", 1 - delta)
        c1 = overrides.pop("c1", 3 * c0 / (2 + c0) * (1 - 1e-9))
        c = c1 / 3
        kappa1 = overrides.pop("kappa1", c / (36 * (1 + c)) * (1 - 1e-6))
        c_prime = overrides.pop("c_prime", 0.9 * c)
        kappa2 = overrides.pop("kappa2", 0.9 * min(kappa1, c_prime / (36 * (1 + c_prime))))
        lam = overrides.pop("lambda_growth", lambda_max(c1, kappa0) / 1.01)
        if overrides:
            raise ValueError(f"unknown parameter overrides: {sorted(overrides)}")
        return cls(delta, c0, c1, kappa0, kappa1, kappa2, c_prime, lam)

    def replace(self, **changes) -> "BuzzardParams":
        return dataclasses.replace(self, **changes)

    @property
    def lambda_max(self) -> float:
        return lambda_max(self.c1, self.kappa0)

    @property
    def n_max(self) -> int:
        """ceil(log(kappa2/kappa0)/log(lambda)) + 2; capped when lambda <= 1."""
        if self.lambda_growth <= 1 or self.kappa2 <= self.kappa0 or self.kappa0 <= 0:
            return 2000
        return math.ceil(math.log(self.kappa2 / self.kappa0) / math.log(self.lambda_growth)) + 2

    @property
    def outer_bands(self) -> bool:
        return self.c_prime < self.c


# ---- parameter inequalities ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    relation: str
    slack: float
    passed: bool


@dataclass(frozen=True)
class ParamReport:
    checks: tuple
    binding_kappa0: float
    binding_x2: float
    binding_bound: float
    optimal_kappa0: float
    optimal_x2: float
    delta_limit: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


def _check(name: str, lhs: float, relation: str, rhs: float) -> Check:
    if relation == ">":
        slack, ok = lhs - rhs, lhs > rhs
    elif relation == ">=":
        slack = lhs - rhs
        ok = slack >= -VALIDATE_SLACK
    elif relation == "<":
        slack, ok = rhs - lhs, lhs < rhs
    elif relation == "<=":
        slack = rhs - lhs
        ok = slack >= -VALIDATE_SLACK
    elif relation == "==":
        slack = -abs(lhs - rhs)
        ok = abs(lhs - rhs) <= VALIDATE_SLACK
    else:
        raise ValueError(relation)
    return Check(name, float(lhs), float(rhs), relation, float(slack), bool(ok))


def bound_first(k0):
    return (9 - 9 * k0) / (9 - 8 * k0)


def bound_second(k0, k2):
    return 1 + (12 * k0 - 4 * k2) / 3


def bound_third(k0):
    return 179 / (180 * (1 - 2 * k0**0.5) ** 2)


def relaxed_x2(k0: float) -> float:
    """max of the three bounds with 4*kappa2 replaced by 1/90."""
    return max(bound_first(k0), 1 + (12 * k0 - 1 / 90) / 3, bound_third(k0))


def _exact_sqrt(x: Fraction, digits: int = 60) -> Fraction:
    getcontext().prec = digits
    return Fraction(Decimal(x.numerator).sqrt() / Decimal(x.denominator).sqrt()) if x else Fraction(0)


def exact_relaxed_x2(k0: float) -> Fraction:
    k = Fraction(k0)
    first = (9 - 9 * k) / (9 - 8 * k)
    second = 1 + (12 * k - Fraction(1, 90)) / 3
    root = _exact_sqrt(k)
    third = Fraction(179) / (180 * (1 - 2 * root) ** 2)
    return max(first, second, third)


def _optimal_kappa0() -> tuple:
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda t: relaxed_x2(math.exp(t)), bounds=(math.log(1e-9), math.log(1e-3)), method="bounded",
                          options={"xatol": 1e-10})
    return math.exp(res.x), float(res.fun)


def delta_limit(x2: float) -> float:
    """Largest delta with (3c0/(2+c0))^2 > x2, c0 = 1 - delta."""
    from scipy.optimize import brentq

    def gap(d):
        c0 = 1 - d
        return (3 * c0 / (2 + c0)) ** 2 - x2

    if gap(0.0) <= 0:
        return 0.0
    return brentq(gap, 0.0, 0.5, xtol=1e-18, rtol=1e-15)


def validate_params(p: BuzzardParams) -> ParamReport:
    c = p.c
    checks = [
        _check("0 < delta", p.delta, ">", 0.0),
        _check("delta < 1", p.delta, "<", 1.0),
        _check("c0 = 1 - delta", p.c0, "==", 1 - p.delta),
        _check("c1 > c0", p.c1, ">", p.c0),
        _check("covering: c1 < 3c0/(2+c0)", p.c1, "<", 3 * p.c0 / (2 + p.c0)),
        _check("c' > 1/4", p.c_prime, ">", 0.25),
        _check("c' <= c1/3", p.c_prime, "<=", c),
        _check("kappa0 > 0", p.kappa0, ">", 0.0),
        _check("kappa0 < kappa2", p.kappa0, "<", p.kappa2),
        _check("kappa2 < kappa1", p.kappa2, "<", p.kappa1),
        _check("kappa1 < c/(36(1+c))", p.kappa1, "<", c / (36 * (1 + c))),
        _check("kappa2 < c'/(36(1+c'))", p.kappa2, "<", p.c_prime / (36 * (1 + p.c_prime))),
        _check("lambda > 1", p.lambda_growth, ">", 1.0),
        _check("growth: lambda <= 9(c1^2-1+kappa0)/(8 c1^2 kappa0)", p.lambda_growth, "<=", p.lambda_max),
        _check("c1^2 > (9-9kappa0)/(9-8kappa0)", p.c1**2, ">", bound_first(p.kappa0)),
        _check("c1^2 >= 1 + (12kappa0-4kappa2)/3", p.c1**2, ">=", bound_second(p.kappa0, p.kappa2)),
        _check(
            "c1^2 >= 179/(180(1-2sqrt(kappa0))^2)",
            p.c1**2,
            ">=",
            bound_third(p.kappa0) if 0 <= p.kappa0 < 0.25 else math.inf,
        ),
    ]
    if 0 < p.kappa0 < 0.25:
        exact = exact_relaxed_x2(p.kappa0)
        rhs = 1 - Fraction(p.kappa0) / 9
        ok = exact < rhs
        checks.append(Check("binding x^2 < 1 - kappa0/9 (exact)", float(exact), float(rhs), "<",
                            float(rhs - exact), bool(ok)))
        binding = float(exact)
    else:
        binding = math.inf
        checks.append(Check("binding x^2 < 1 - kappa0/9 (exact)", math.inf, 1.0, "<", -math.inf, False))
    k_opt, x2_opt = _optimal_kappa0()
    return ParamReport(
        tuple(checks),
        p.kappa0,
        binding,
        1 - p.kappa0 / 9,
        k_opt,
        x2_opt,
        delta_limit(binding) if math.isfinite(binding) else 0.0,
    )


# ---- kappa and membership ------------------------------------------------------------------


def kappa_of(p: BuzzardParams, A: AffineMap) -> float:
    return overlap_area(A, p.c0) / (p.c0**2 * (1 + abs(A.alpha) ** 2))


def kappa_batch(p: BuzzardParams, alpha, beta) -> np.ndarray:
    alpha = np.asarray(alpha, complex)
    return overlap_area_batch(alpha, beta, p.c0) / (p.c0**2 * (1 + np.abs(alpha) ** 2))


def _guarded_kappa(p: BuzzardParams, alpha, beta) -> np.ndarray:
    alpha = np.asarray(alpha, complex)
    area = overlap_area_batch(alpha, beta, p.c0)
    return np.maximum(area - AREA_GUARD * p.c0**2, 0.0) / (p.c0**2 * (1 + np.abs(alpha) ** 2))


BAND_NAMES = {-1: "L-1", 0: "L0", 1: "L1"}


def classify(p: BuzzardParams, alpha, kappa) -> dict:
    """Vectorised band, membership, interior and margins."""
    lr = np.log(np.abs(np.asarray(alpha, complex)))
    kappa = np.asarray(kappa, float)
    lo_c, hi_c = 0.5 * math.log(p.c), -0.5 * math.log(p.c)
    lo_p, hi_p = 0.5 * math.log(p.c_prime), -0.5 * math.log(p.c_prime)
    band = np.where(lr < lo_c, -1, np.where(lr > hi_c, 1, 0))
    alpha_margin = np.minimum(lr - lo_p, hi_p - lr)
    in_annulus = alpha_margin >= -1e-14
    thr = np.where(band == 0, p.kappa0, p.kappa2)
    member = in_annulus & (kappa >= thr)
    near_edge = (band == 0) & (np.minimum(lr - lo_c, hi_c - lr) < INTERIOR_LOG_ALPHA) & p.outer_bands
    thr_int = np.where((band != 0) | near_edge, p.kappa2, p.kappa0)
    interior = (alpha_margin >= INTERIOR_LOG_ALPHA) & (kappa - thr_int >= INTERIOR_KAPPA * p.kappa0)
    return {
        "band": band,
        "member": member,
        "interior": interior,
        "kappa_margin": kappa - thr,
        "alpha_margin": alpha_margin,
        "margin": np.minimum(kappa - thr, alpha_margin),
        "threshold": thr,
    }


@dataclass(frozen=True)
class Membership:
    band: str | None
    kappa: float
    kappa_margin: float
    alpha_margin: float
    margin: float
    member: bool
    interior: bool


def in_certificate(p: BuzzardParams, rc: RelativeConfig | AffineMap) -> Membership:
    A = rc.right_map if isinstance(rc, RelativeConfig) else rc
    k = kappa_of(p, A)
    cl = classify(p, np.array([A.alpha]), np.array([k]))
    inside = bool(cl["alpha_margin"][0] >= -1e-14)
    return Membership(
        BAND_NAMES[int(cl["band"][0])] if inside else None,
        k,
        float(cl["kappa_margin"][0]),
        float(cl["alpha_margin"][0]),
        float(cl["margin"][0]),
        bool(cl["member"][0]),
        bool(cl["interior"][0]),
    )


# ---- the renormalization step --------------------------------------------------------------


class Transitions:
    """F^{theta a}(z) = fa*z + fb for every letter a, per sample; the unperturbed case is c(z + a)."""

    def __init__(self, p: BuzzardParams) -> None:
        self.c = p.c

    def left(self, idx: np.ndarray) -> tuple:
        # real factors keep alpha * (c / c) exact on the band edges
        return np.full((len(idx), NLET), self.c), np.broadcast_to(self.c * POINTS, (len(idx), NLET))

    right = left

    def chosen(self, side: str, idx: np.ndarray, letters: np.ndarray) -> tuple:
        return np.full(len(idx), self.c), self.c * POINTS[letters]

    def advance(self, idx, left_letters, right_letters) -> None:
        pass


class PerturbedTransitions(Transitions):
    """Transition affines of a perturbed system, tracked along each sample's growing itineraries."""

    def __init__(self, p: BuzzardParams, tables: dict, left_hist: np.ndarray, right_hist: np.ndarray) -> None:
        super().__init__(p)
        self.tables = tables
        self.hist = {"left": np.array(left_hist), "right": np.array(right_hist)}

    def _all(self, side: str, idx: np.ndarray) -> tuple:
        hist = self.hist[side][idx]
        fa = np.empty((len(idx), NLET), complex)
        fb = np.empty((len(idx), NLET), complex)
        for a in range(NLET):
            fa[:, a], fb[:, a] = transition_batch(self.tables, hist, np.full(len(idx), a))
        return fa, fb

    def left(self, idx):
        return self._all("left", idx)

    def right(self, idx):
        return self._all("right", idx)

    def chosen(self, side, idx, letters):
        return transition_batch(self.tables, self.hist[side][idx], letters)

    def advance(self, idx, left_letters, right_letters) -> None:
        for side, letters in (("left", left_letters), ("right", right_letters)):
            use = letters >= 0
            if not use.any():
                continue
            rows = idx[use]
            h = self.hist[side]
            h[rows, :-1] = h[rows, 1:]
            h[rows, -1] = letters[use]


@dataclass
class BatchStep:
    left: np.ndarray
    right: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    kappa: np.ndarray
    landed: np.ndarray
    best_kappa: np.ndarray


def _apply(alpha, beta, la, lb, ra, rb):
    """F_L^-1 o A o F_R."""
    return alpha * (ra / la), (alpha * rb + beta - lb) / la


def step_batch(
    p: BuzzardParams, alpha: np.ndarray, beta: np.ndarray, trans: Transitions, idx: np.ndarray, strict: bool = True
) -> BatchStep:
    """One certificate step for every sample: the case analysis by band, maximizing kappa'
    over candidates that land in L (a candidate is rejected cheaply when the circumscribed
    discs of the two squares are disjoint). With strict=False a step may leave L when no
    candidate lands in it; the largest kappa' is taken instead."""
    n = len(alpha)
    lr = np.log(np.abs(alpha))
    band = np.where(lr < 0.5 * math.log(p.c), -1, np.where(lr > -0.5 * math.log(p.c), 1, 0))
    out = BatchStep(
        np.full(n, -1), np.full(n, -1), alpha.copy(), beta.copy(), np.zeros(n), np.zeros(n, bool), np.zeros(n)
    )
    for code in (-1, 0, 1):
        sel = np.nonzero(band == code)[0]
        if len(sel) == 0:
            continue
        a, b = alpha[sel, None], beta[sel, None]
        if code == 0:
            la, lb = trans.left(idx[sel])
            ra, rb = trans.right(idx[sel])
            na, nb = _apply(a[:, :, None], b[:, :, None], la[:, :, None], lb[:, :, None], ra[:, None, :], rb[:, None, :])
            na, nb = na.reshape(len(sel), -1), nb.reshape(len(sel), -1)
        elif code == 1:
            ra, rb = trans.right(idx[sel])
            na, nb = _apply(a, b, 1.0, 0.0, ra, rb)
        else:
            la, lb = trans.left(idx[sel])
            na, nb = _apply(a, b, la, lb, 1.0, 0.0)
        kap = np.zeros(na.shape)
        near = np.abs(nb) <= (p.c0 / math.sqrt(2)) * (1 + np.abs(na)) * (1 + 1e-12)
        if near.any():
            kap[near] = _guarded_kappa(p, na[near], nb[near])
        cl = classify(p, na, kap)
        score = np.where(cl["member"], kap, -1.0 if strict else kap - 1.0)
        best = np.argmax(score, axis=1)
        rows = np.arange(len(sel))
        out.alpha[sel] = na[rows, best]
        out.beta[sel] = nb[rows, best]
        out.kappa[sel] = kap[rows, best]
        out.landed[sel] = cl["member"][rows, best]
        out.best_kappa[sel] = kap.max(axis=1)
        if code == 0:
            out.left[sel], out.right[sel] = best // NLET, best % NLET
        elif code == 1:
            out.right[sel] = best
        else:
            out.left[sel] = best
    return out


class CertificateFailure(Exception):
    def __init__(self, message: str, rc: RelativeConfig, best_kappa: float) -> None:
        super().__init__(message)
        self.rc = rc
        self.best_kappa = best_kappa


@dataclass(frozen=True)
class StepResult:
    left_letter: int | None
    right_letter: int | None
    config: RelativeConfig
    kappa: float
    margin: float


def cert_step(p: BuzzardParams, rc: RelativeConfig) -> StepResult:
    A = rc.right_map
    st = step_batch(p, np.array([A.alpha]), np.array([A.beta]), Transitions(p), np.array([0]))
    left = int(st.left[0]) if st.left[0] >= 0 else None
    right = int(st.right[0]) if st.right[0] >= 0 else None
    new = RelativeConfig(
        rc.left_theta.append(left) if left is not None else rc.left_theta,
        rc.right_theta.append(right) if right is not None else rc.right_theta,
        AffineMap(complex(st.alpha[0]), complex(st.beta[0])),
    )
    if not st.landed[0]:
        raise CertificateFailure(
            f"no renormalization of {A} lands in L (best kappa' = {st.best_kappa[0]:.6g})", rc, float(st.best_kappa[0])
        )
    m = in_certificate(p, new.right_map)
    return StepResult(left, right, new, m.kappa, m.margin)


# ---- chains and sampling -------------------------------------------------------------------


@dataclass
class ChainRun:
    status: np.ndarray  # 0 running, 1 interior reached, 2 left L, 3 too long
    steps: np.ndarray
    final_alpha: np.ndarray
    final_beta: np.ndarray
    final_margin: np.ndarray
    letters: list = field(default_factory=list)  # per step: (left, right) arrays over all samples
    traces: dict = field(default_factory=dict)


def run_chains(
    p: BuzzardParams,
    alpha: np.ndarray,
    beta: np.ndarray,
    n_max: int,
    trans: Transitions | None = None,
    record: bool = False,
    trace: np.ndarray | None = None,
    strict: bool = True,
) -> ChainRun:
    trans = trans or Transitions(p)
    n = len(alpha)
    a, b = np.array(alpha, complex), np.array(beta, complex)
    status = np.zeros(n, int)
    steps = np.zeros(n, int)
    margin = np.full(n, np.nan)
    run = ChainRun(status, steps, a, b, margin)
    traced = set(int(i) for i in (trace if trace is not None else []))
    for i in traced:
        run.traces[i] = [(complex(a[i]), float(kappa_batch(p, a[i], b[i])))]
    for _ in range(n_max):
        act = np.nonzero(status == 0)[0]
        if len(act) == 0:
            break
        st = step_batch(p, a[act], b[act], trans, act, strict)
        trans.advance(act, st.left, st.right)
        if record:
            lt = np.full(n, -2)
            rt = np.full(n, -2)
            lt[act], rt[act] = st.left, st.right
            run.letters.append((lt, rt))
        a[act], b[act] = st.alpha, st.beta
        steps[act] += 1
        cl = classify(p, st.alpha, st.kappa)
        margin[act] = cl["margin"]
        if strict:
            status[act[~st.landed]] = 2
        status[act[st.landed & cl["interior"]]] = 1
        for i in traced.intersection(act.tolist()):
            run.traces[i].append((complex(a[i]), float(kappa_batch(p, a[i], b[i]))))
    status[status == 0] = 3
    return run


@dataclass(frozen=True)
class Samples:
    alpha: np.ndarray
    beta: np.ndarray
    boundary: np.ndarray


def _contour_radius(p: BuzzardParams, alpha: np.ndarray, direction: np.ndarray, thr: np.ndarray, iters: int = 64):
    """Largest rho with kappa(alpha, rho*direction) >= thr, by bisection (kappa decreases along rays)."""
    lo = np.zeros(len(alpha))
    hi = (p.c0 / math.sqrt(2)) * (1 + np.abs(alpha)) * (1 + 1e-9)
    for _ in range(iters):
        mid = (lo + hi) / 2
        ok = _guarded_kappa(p, alpha, mid * direction) >= thr
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return lo


def _thresholds(p: BuzzardParams, alpha: np.ndarray) -> np.ndarray:
    return classify(p, alpha, np.zeros(len(alpha)))["threshold"]


def sample_configurations(p: BuzzardParams, n_samples: int = 10_000, seed: int = 0) -> Samples:
    """Boundary samples on a log-polar alpha grid over R_{c'} (band and annulus edges included)
    with beta on the kappa-threshold contour, plus random interior samples."""
    rng = np.random.default_rng(seed)
    lo_p, hi_p = 0.5 * math.log(p.c_prime), -0.5 * math.log(p.c_prime)
    radii = np.exp(np.unique(np.concatenate([np.linspace(lo_p, hi_p, 25), [0.5 * math.log(p.c), -0.5 * math.log(p.c)]])))
    n_phi = 6
    n_boundary_target = int(0.75 * n_samples)
    n_psi = max(4, math.ceil(n_boundary_target / (len(radii) * n_phi)))
    phis = np.arange(n_phi) * (math.pi / 2) / n_phi
    psis = np.arange(n_psi) * math.pi / n_psi
    R, PHI, PSI = np.meshgrid(radii, phis, psis, indexing="ij")
    ab = (R * np.exp(1j * PHI)).ravel()
    # keep grid radii exact on the band and annulus edges
    direction_b = np.exp(1j * PSI).ravel()
    rho = _contour_radius(p, ab, direction_b, _thresholds(p, ab))
    bb = rho * direction_b
    n_int = max(n_samples - len(ab), 0)
    ai = np.exp(rng.uniform(lo_p, hi_p, n_int)) * np.exp(2j * math.pi * rng.uniform(size=n_int))
    di = np.exp(2j * math.pi * rng.uniform(size=n_int))
    rho_i = _contour_radius(p, ai, di, _thresholds(p, ai))
    bi = rng.uniform(size=n_int) * rho_i * di
    alpha = np.concatenate([ab, ai])
    beta = np.concatenate([bb, bi])
    return Samples(alpha, beta, np.concatenate([np.ones(len(ab), bool), np.zeros(n_int, bool)]))


# ---- verification --------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleFailure:
    index: int
    kind: str
    alpha: complex
    beta: complex
    steps: int
    detail: str


@dataclass
class VerificationReport:
    params: BuzzardParams
    param_report: ParamReport
    n_samples: int
    n_boundary: int
    n_interior: int
    n_max: int
    failures: list
    max_chain: int
    mean_chain: float
    chain_histogram: dict
    min_initial_margin: float
    min_final_margin: float
    traces: dict = field(default_factory=dict)
    run: ChainRun | None = None
    samples: Samples | None = None

    @property
    def passed(self) -> bool:
        return not self.failures


def _chunks(n: int, k: int) -> list:
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [np.arange(bounds[i], bounds[i + 1]) for i in range(k) if bounds[i + 1] > bounds[i]]


def _run_chunk(args) -> ChainRun:
    p, alpha, beta, n_max = args
    return run_chains(p, alpha, beta, n_max)


def _merge(runs: list) -> ChainRun:
    return ChainRun(
        np.concatenate([r.status for r in runs]),
        np.concatenate([r.steps for r in runs]),
        np.concatenate([r.final_alpha for r in runs]),
        np.concatenate([r.final_beta for r in runs]),
        np.concatenate([r.final_margin for r in runs]),
    )


def _failures_from(run: ChainRun, s: Samples, n_max: int) -> list:
    out = []
    for i in np.nonzero(run.status != 1)[0]:
        kind = "left-L" if run.status[i] == 2 else "too-long"
        detail = (
            f"step {run.steps[i]} lands outside L"
            if run.status[i] == 2
            else f"no interior point within {n_max} steps"
        )
        out.append(SampleFailure(int(i), kind, complex(s.alpha[i]), complex(s.beta[i]), int(run.steps[i]), detail))
    return out


def trace_indices(s: Samples, count: int = 16) -> np.ndarray:
    """A spread of sample indices across the alpha range for diagram arrows."""
    order = np.argsort(np.abs(s.alpha))
    return np.sort(order[np.linspace(0, len(order) - 1, count).astype(int)])


def verify_certificate(
    p: BuzzardParams, samples: int = 10_000, seed: int = 0, threads: int = 1, trace: int = 16
) -> VerificationReport:
    """Samples L and runs certificate chains from every sample until an interior point is reached."""
    report = validate_params(p)
    s = sample_configurations(p, samples, seed)
    n_max = p.n_max
    tr = trace_indices(s, trace) if trace else None
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        parts = _chunks(len(s.alpha), threads)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(_run_chunk, [(p, s.alpha[ix], s.beta[ix], n_max) for ix in parts]))
        run = _merge(runs)
        if tr is not None:
            run.traces = run_chains(p, s.alpha[tr], s.beta[tr], n_max, trace=np.arange(len(tr))).traces
    else:
        run = run_chains(p, s.alpha, s.beta, n_max, record=True, trace=tr)
        if tr is not None:
            run.traces = {j: run.traces[int(i)] for j, i in enumerate(tr)}
    failures = [
        SampleFailure(-1, "parameter", 0j, 0j, 0, f"{c.name}: lhs={c.lhs:.17g} rhs={c.rhs:.17g} slack={c.slack:.3e}")
        for c in report.failures()
    ]
    failures += _failures_from(run, s, n_max)
    k0 = kappa_batch(p, s.alpha, s.beta)
    init = classify(p, s.alpha, k0)["margin"]
    ok = run.status == 1
    hist: dict = {}
    for v in run.steps:
        hist[int(v)] = hist.get(int(v), 0) + 1
    return VerificationReport(
        p,
        report,
        len(s.alpha),
        int(s.boundary.sum()),
        int((~s.boundary).sum()),
        n_max,
        failures,
        int(run.steps.max()) if len(run.steps) else 0,
        float(run.steps.mean()) if len(run.steps) else 0.0,
        dict(sorted(hist.items())),
        float(init.min()),
        float(run.final_margin[ok].min()) if ok.any() else math.nan,
        run.traces,
        run,
        s,
    )


# ---- perturbation stability ----------------------------------------------------------------


@dataclass(frozen=True)
class SystemOutcome:
    seed: int
    replayed: int
    fallback: int
    failures: int
    max_chain: int


@dataclass
class StabilityReport:
    eta: float
    n_samples: int
    systems: list

    @property
    def total_failures(self) -> int:
        return sum(s.failures for s in self.systems)

    @property
    def passed(self) -> bool:
        return self.total_failures == 0


def _replay(p, s: Samples, base: ChainRun, trans: PerturbedTransitions, idx: np.ndarray) -> tuple:
    """Re-applies the base chains' letters under perturbed transitions; success means some
    prefix of the letters ends in the interior of L."""
    a, b = s.alpha[idx].copy(), s.beta[idx].copy()
    status = np.zeros(len(idx), int)
    steps = np.zeros(len(idx), int)
    for lt_all, rt_all in base.letters:
        act = np.nonzero(status == 0)[0]
        if len(act) == 0:
            break
        rows = idx[act]
        lt, rt = lt_all[rows], rt_all[rows]
        done = (lt == -2) & (rt == -2)
        status[act[done]] = 3
        act, rows, lt, rt = act[~done], rows[~done], lt[~done], rt[~done]
        if len(act) == 0:
            continue
        la = np.ones(len(act), complex)
        lb = np.zeros(len(act), complex)
        ra = np.ones(len(act), complex)
        rb = np.zeros(len(act), complex)
        ul, ur = lt >= 0, rt >= 0
        if ul.any():
            la[ul], lb[ul] = trans.chosen("left", rows[ul], lt[ul])
        if ur.any():
            ra[ur], rb[ur] = trans.chosen("right", rows[ur], rt[ur])
        trans.advance(rows, lt, rt)
        na, nb = _apply(a[act], b[act], la, lb, ra, rb)
        kap = _guarded_kappa(p, na, nb)
        cl = classify(p, na, kap)
        a[act], b[act] = na, nb
        steps[act] += 1
        # only the end of a fixed-letter chain has to be robust; intermediate points may leave L
        status[act[cl["member"] & cl["interior"]]] = 1
    status[status == 0] = 3
    return status, steps


def stability_sweep(
    p: BuzzardParams,
    n_systems: int = 100,
    eta: float = 1e-6,
    seed: int = 0,
    samples: int = 10_000,
    history: int = 10,
) -> StabilityReport:
    """Holds the certificate fixed and re-runs the sweep against perturbed systems.

    Each sample gets random itineraries theta, theta'; transition affines are recomputed from the
    perturbed branches along them. The unperturbed chain's letters are replayed first; samples
    whose replay does not reach the interior get a fresh chain search under the perturbed maps.
    Only reaching the interior counts: intermediate configurations may leave L.
    """
    s = sample_configurations(p, samples, seed)
    base = run_chains(p, s.alpha, s.beta, p.n_max, record=True)
    n = len(s.alpha)
    outcomes = []
    for k in range(n_systems):
        sys_seed = seed * 100_003 + k + 1
        sys = perturbed_buzzard(p.c0, p.c1, eta, seed=sys_seed)
        rng = np.random.default_rng(sys_seed)
        lh = rng.integers(0, NLET, (n, history + 1))
        rh = rng.integers(0, NLET, (n, history + 1))
        tables = sys.tables()
        replay_trans = PerturbedTransitions(p, tables, lh, rh)
        idx = np.arange(n)
        status, steps = _replay(p, s, base, replay_trans, idx)
        bad = np.nonzero(status != 1)[0]
        failures = 0
        max_chain = int(steps[status == 1].max()) if (status == 1).any() else 0
        if len(bad):
            fresh = PerturbedTransitions(p, tables, lh[bad], rh[bad])
            rerun = run_chains(p, s.alpha[bad], s.beta[bad], p.n_max, trans=fresh, strict=False)
            failures = int((rerun.status != 1).sum())
            if (rerun.status == 1).any():
                max_chain = max(max_chain, int(rerun.steps[rerun.status == 1].max()))
        outcomes.append(SystemOutcome(sys_seed, int(n - len(bad)), int(len(bad)), failures, max_chain))
    return StabilityReport(eta, n, outcomes)


# ---- strip separation ---------------------------------------------------------------------------


def strip_separation_check(p: BuzzardParams, A: AffineMap) -> bool:
    """Whether S(0;c0) n A(S(0;c0)) lies in one of the strips |Re|, |Im| >= c0/3 of S(0;c0),
    and also in one of the image strips A(S_j)."""
    c = p.c
    r = abs(A.alpha)
    if not (math.sqrt(c) * (1 - 1e-12) <= r <= (1 + 1e-12) / math.sqrt(c)):
        raise ValueError(f"|alpha| = {r} outside R_c")
    k = kappa_of(p, A)
    if k >= p.kappa1:
        raise ValueError(f"kappa(A) = {k:.6g} >= kappa1 = {p.kappa1:.6g}")
    sq = Square(0j, p.c0).polygon()
    pts = clip_points(sq.map(A), sq)
    if not pts:
        return True
    t = p.c0 / 3
    tol = 1e-12

    def in_strip(points) -> bool:
        tests = (
            lambda z: z.real >= t - tol,
            lambda z: z.real <= -t + tol,
            lambda z: z.imag >= t - tol,
            lambda z: z.imag <= -t + tol,
        )
        return any(all(test(z) for z in points) for test in tests)

    inv = invert(A)
    return in_strip(pts) and in_strip([inv(z) for z in pts])
