import cmath
import math

import numpy as np
import pytest

from conformal_cantor.certificate import (
    BuzzardParams,
    CertificateFailure,
    _contour_radius,
    cert_step,
    exact_relaxed_x2,
    in_certificate,
    kappa_of,
    lambda_max,
    sample_configurations,
    stability_sweep,
    strip_separation_check,
    validate_params,
    verify_certificate,
)
from conformal_cantor.config_space import RelativeConfig
from conformal_cantor.geometry import AffineMap
from conformal_cantor.symbolic import NegSequence

THETA = NegSequence((4,))
DISPLAYED = ("c1^2 >", "c1^2 >=")


@pytest.fixture(scope="module")
def p():
    return BuzzardParams.preset()


def rc(A: AffineMap) -> RelativeConfig:
    return RelativeConfig(THETA, THETA, A)


def displayed_checks(report):
    return [c for c in report.checks if c.name.startswith(DISPLAYED)]


def test_preset_values(p):
    assert p.c0 == 1 - 7e-8
    assert p.c1 == pytest.approx(3 * p.c0 / (2 + p.c0) * (1 - 1e-9), rel=1e-15)
    assert p.kappa1 < p.c / (36 * (1 + p.c))
    assert p.kappa0 < p.kappa2 < p.kappa1
    assert 1 < p.lambda_growth < p.lambda_max
    assert p.lambda_growth == pytest.approx(lambda_max(p.c1, p.kappa0) / 1.01)
    assert p.n_max <= math.log(p.kappa2 / p.kappa0) / math.log(p.lambda_growth) + 3


def test_kappa_examples(p):
    assert kappa_of(p, AffineMap.identity()) == pytest.approx(0.5, rel=1e-14)
    assert kappa_of(p, AffineMap(1, 3 * p.c0)) == 0.0
    assert kappa_of(p, AffineMap(cmath.exp(1j * math.pi / 4), 0)) == pytest.approx(math.sqrt(2) - 1, abs=1e-6)


def test_membership_examples(p):
    m = in_certificate(p, rc(AffineMap.identity()))
    assert m.member and m.band == "L0"
    assert m.margin == pytest.approx(0.5 - p.kappa0, rel=1e-12)
    far = in_certificate(p, AffineMap(1.01 / math.sqrt(p.c_prime), 0))
    assert not far.member and far.band is None
    # overlap area c0^2 kappa0, half the area kappa0 requires
    near = in_certificate(p, AffineMap(1, p.c0 * (1 - p.kappa0)))
    assert near.kappa == pytest.approx(p.kappa0 / 2, rel=1e-6)
    assert not near.member


def test_validate_preset_passes(p):
    report = validate_params(p)
    assert report.passed, report.failures()
    assert len(report.checks) == 18
    exact = exact_relaxed_x2(1e-6)
    assert float(exact) < 1 - 1e-6 / 9


def test_validate_c1_squared_example():
    c1 = math.sqrt(1 - 1e-7)
    report = validate_params(BuzzardParams.preset(c1=c1))
    checks = displayed_checks(report)
    assert len(checks) == 3 and all(c.passed for c in checks)


def test_validate_large_kappa0_fails_third_bound():
    report = validate_params(BuzzardParams.preset(kappa0=0.1))
    third = next(c for c in report.checks if "179" in c.name)
    assert not third.passed
    assert third.rhs == pytest.approx(179 / (180 * (1 - 2 * math.sqrt(0.1)) ** 2))
    assert third.rhs > 7


def test_validate_rejects_inverted_kappas(p):
    report = validate_params(p.replace(kappa2=2 * p.kappa1))
    assert any(c.name == "kappa2 < kappa1" for c in report.failures())


def test_cert_step_identity(p):
    res = cert_step(p, rc(AffineMap.identity()))
    assert res.left_letter is not None and res.right_letter is not None
    assert res.kappa >= p.kappa0
    assert in_certificate(p, res.config).member


def test_cert_step_outer_band_is_single_sided(p):
    # 1.8 lies in the upper band: above 1/sqrt(c), below 1/sqrt(c')
    A = AffineMap(1.8, 0)
    m = in_certificate(p, A)
    assert m.band == "L1" and m.kappa >= p.kappa2
    res = cert_step(p, rc(A))
    assert res.left_letter is None and res.right_letter is not None
    assert abs(res.config.right_map.alpha) == pytest.approx(1.8 * p.c, rel=1e-15)
    assert res.kappa >= p.kappa0
    low = cert_step(p, rc(AffineMap(1 / 1.8, 0)))
    assert low.right_letter is None and low.left_letter is not None
    assert abs(low.config.right_map.alpha) == pytest.approx(1 / (1.8 * p.c), rel=1e-15)


def test_cert_step_growth_near_kappa1(p):
    rng = np.random.default_rng(0)
    n = 100
    lo, hi = 0.5 * math.log(p.c), -0.5 * math.log(p.c)
    alpha = np.exp(rng.uniform(lo, hi, n)) * np.exp(2j * math.pi * rng.uniform(size=n))
    direction = np.exp(2j * math.pi * rng.uniform(size=n))
    target = np.full(n, 0.99 * p.kappa1)
    beta = _contour_radius(p, alpha, direction, target) * direction
    for a, b in zip(alpha, beta):
        A = AffineMap(complex(a), complex(b))
        k = kappa_of(p, A)
        assert 0.98 * p.kappa1 < k < p.kappa1
        res = cert_step(p, rc(A))
        assert res.kappa >= p.lambda_growth * k


def test_cert_step_failure_outside_l(p):
    with pytest.raises(CertificateFailure) as info:
        cert_step(p, rc(AffineMap(1, 10)))
    assert info.value.best_kappa == 0.0


def test_samples_cover_band_edges(p):
    s = sample_configurations(p, 2000, seed=1)
    r = np.abs(s.alpha)
    assert np.isclose(r, math.sqrt(p.c), rtol=1e-14).any()
    assert np.isclose(r, 1 / math.sqrt(p.c_prime), rtol=1e-14).any()
    assert s.boundary.sum() > 0 and (~s.boundary).sum() > 0
    assert np.all(r >= math.sqrt(p.c_prime) * (1 - 1e-14))


def test_verify_small_grid_passes(p):
    rep = verify_certificate(p, samples=2000, seed=3)
    assert rep.passed, rep.failures[:3]
    assert rep.max_chain <= rep.n_max
    assert rep.min_final_margin > 0
    assert sum(rep.chain_histogram.values()) == rep.n_samples


def test_verify_is_deterministic(p):
    a = verify_certificate(p, samples=500, seed=9, trace=0)
    b = verify_certificate(p, samples=500, seed=9, trace=0)
    assert a.chain_histogram == b.chain_histogram
    assert a.min_final_margin == b.min_final_margin


def test_verify_threads_agree(p):
    a = verify_certificate(p, samples=600, seed=2, trace=0)
    b = verify_certificate(p, samples=600, seed=2, threads=2, trace=0)
    assert a.chain_histogram == b.chain_histogram
    assert len(a.failures) == len(b.failures) == 0


def test_verify_broken_params_report_failures(p):
    rep = verify_certificate(p.replace(kappa2=2 * p.kappa1), samples=300, seed=0, trace=0)
    assert not rep.passed
    assert any(f.kind == "parameter" for f in rep.failures)


def test_verify_large_delta_fails():
    rep = verify_certificate(BuzzardParams.preset(delta=1e-2), samples=300, seed=0, trace=0)
    assert not rep.passed


def test_strip_examples(p):
    assert strip_separation_check(p, AffineMap(1, 0.95 * p.c0 * (1 + 1j)))
    assert strip_separation_check(p, AffineMap(1, 3 * p.c0))
    with pytest.raises(ValueError):
        strip_separation_check(p, AffineMap.identity())
    with pytest.raises(ValueError):
        strip_separation_check(p, AffineMap(3, 2 * p.c0))


def strip_oracle(p, A, n=100_000, seed=0):
    """Point-sampled version of the strip test, independent of polygon clipping."""
    rng = np.random.default_rng(seed)
    h = p.c0 / 2
    z = rng.uniform(-h, h, n) + 1j * rng.uniform(-h, h, n)
    w = (z - A.beta) / A.alpha
    hit = (np.abs(w.real) <= h) & (np.abs(w.imag) <= h)
    t = p.c0 / 3

    def one_strip(pts):
        return any(bool(np.all(f(pts))) for f in (
            lambda q: q.real >= t, lambda q: q.real <= -t, lambda q: q.imag >= t, lambda q: q.imag <= -t))

    return one_strip(z[hit]) and one_strip(w[hit])


def test_strip_check_agrees_with_point_oracle(p):
    rng = np.random.default_rng(11)
    n = 60
    lo, hi = 0.5 * math.log(p.c), -0.5 * math.log(p.c)
    alpha = np.exp(rng.uniform(lo, hi, n)) * np.exp(2j * math.pi * rng.uniform(size=n))
    direction = np.exp(2j * math.pi * rng.uniform(size=n))
    target = rng.uniform(0.01, 0.99, n) * p.kappa1
    beta = _contour_radius(p, alpha, direction, target) * direction
    for a, b in zip(alpha, beta):
        A = AffineMap(complex(a), complex(b))
        assert 0 < kappa_of(p, A) < p.kappa1
        assert strip_separation_check(p, A) == strip_oracle(p, A)


def test_strip_corner_triangle_counterexample(p):
    # the pulled-back overlap is a corner triangle with legs ~0.18 > c0/6, so no single image strip holds it
    A = AffineMap(0.48615161908494703 - 0.4870648591756542j, -0.8991682092140783 - 0.4094787814866233j)
    assert kappa_of(p, A) == pytest.approx(0.0051886, rel=1e-4)
    assert kappa_of(p, A) < p.kappa1
    assert not strip_separation_check(p, A)
    assert not strip_oracle(p, A, n=1_000_000)


def test_stability_small_sweep(p):
    rep = stability_sweep(p, n_systems=3, eta=1e-6, samples=500)
    assert rep.passed
    assert len(rep.systems) == 3
    assert all(s.replayed + s.fallback == rep.n_samples for s in rep.systems)
