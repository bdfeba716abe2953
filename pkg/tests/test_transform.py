import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oped import (
    Ellipse,
    EllipsePhantom,
    FilterSpec,
    PolynomialImage,
    Sinogram,
    SinogramGeometry,
    bump_h,
    chebyshev_u,
    eta_eval,
    half_circle_symmetry_check,
    oped_evaluate,
    parity_equivalence,
    sample_sinogram,
    shepp_logan,
    sine_coefficients,
    unit_disk,
)
from oped.phantom import FULL_CIRCLE, ODD_FULL_CIRCLE
from oped.transform import BUMP, chebyshev_u_series, evaluate_points

from oracles import chebyshev_u_recurrence, sine_sum


def test_chebyshev_small_cases():
    assert chebyshev_u(0, 0.37) == 1.0
    assert chebyshev_u(3, 1.0) == pytest.approx(4.0, abs=1e-14)
    assert chebyshev_u(3, -1.0) == pytest.approx(-4.0, abs=1e-14)
    assert chebyshev_u(2, 0.3) == pytest.approx(-0.64, abs=1e-14)


def test_chebyshev_against_recurrence():
    rng = np.random.default_rng(5)
    ts = np.concatenate([rng.uniform(-1, 1, 40), [-1.0, 1.0, 1 - 1e-17, -1 + 1e-15]])
    for k in (1, 7, 50, 333, 1000, 2000):
        want = np.array([chebyshev_u_recurrence(k, t) for t in ts])
        got = chebyshev_u(k, ts)
        np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-8 * (k + 1))


def test_chebyshev_domain():
    with pytest.raises(ValueError):
        chebyshev_u(2, 1.1)
    with pytest.raises(ValueError):
        chebyshev_u(-1, 0.2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=12), st.floats(-1, 1))
def test_clenshaw_matches_direct_sum(coeffs, t):
    want = sum(c * chebyshev_u_recurrence(k, t) for k, c in enumerate(coeffs))
    assert float(chebyshev_u_series(coeffs, t)) == pytest.approx(want, abs=1e-9)


def test_bump_values():
    for k in range(6):
        assert bump_h(k, 0.0) == pytest.approx(1.0)
        assert bump_h(k, 1.0) == pytest.approx(0.0)
    assert bump_h(1, 0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        bump_h(2, 1.5)


def test_eta_values():
    assert eta_eval(FilterSpec(0.3, 0.9), 0.2) == 1.0
    for tau in (0.0, 0.2, 0.7):
        assert eta_eval(FilterSpec(tau, 0.6), 1.0) == pytest.approx(0.6)
    assert eta_eval(FilterSpec(0.0, 0.9), 0.5) == pytest.approx(0.95, abs=1e-15)
    # bump of order 1 is the same cubic
    np.testing.assert_allclose(
        eta_eval(FilterSpec(0.2, 0.3, order=1, profile=BUMP), np.linspace(0, 1, 11)),
        eta_eval(FilterSpec(0.2, 0.3), np.linspace(0, 1, 11)),
        atol=1e-15,
    )


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 1), st.integers(0, 5))
def test_eta_monotone_and_bounded(tau, beta, order):
    for f in (FilterSpec(tau, beta), FilterSpec(tau, beta, order, BUMP)):
        vals = eta_eval(f, np.linspace(0, 1, 201))
        assert np.all(np.diff(vals) <= 1e-12)
        assert vals[0] == 1.0
        assert vals[-1] == pytest.approx(beta, abs=1e-12)


def test_filter_validation():
    with pytest.raises(ValueError):
        FilterSpec(1.0, 0.5)
    with pytest.raises(ValueError):
        FilterSpec(0.1, 1.5)
    with pytest.raises(ValueError):
        FilterSpec(0.1, 0.5, profile="gaussian")


@pytest.mark.parametrize("n_d", [2, 3, 8, 251])
def test_disk_coefficients(n_d):
    g = SinogramGeometry(2 * n_d, n_d)
    c = sine_coefficients(sample_sinogram(unit_disk(), g))
    np.testing.assert_allclose(c.lam[0], 1.0, atol=1e-13)
    np.testing.assert_allclose(c.lam[1:], 0.0, atol=1e-13)


def test_zero_sinogram():
    g = SinogramGeometry(12)
    c = sine_coefficients(Sinogram(g, np.zeros((6, 6))))
    assert not c.lam.any()
    img = oped_evaluate(c, FilterSpec(), 16)
    assert not img.values.any()


def test_fast_matches_direct_loop():
    g = SinogramGeometry(16, 8)
    s = sample_sinogram(shepp_logan(), g)
    fast = sine_coefficients(s)
    assert fast.lam[2, 5] == pytest.approx(sine_sum(s.view(5), 2), abs=1e-14)
    np.testing.assert_allclose(fast.lam, sine_coefficients(s, "direct").lam, atol=1e-13)


def test_symmetry_check():
    g = SinogramGeometry(8, 4, parity=FULL_CIRCLE)
    head = sine_coefficients(sample_sinogram(shepp_logan(), g))
    assert half_circle_symmetry_check(head)
    bad = head.copy()
    bad.lam[1, 2] += 1e-3
    assert not half_circle_symmetry_check(bad)
    disk = sine_coefficients(sample_sinogram(unit_disk(), g))
    assert half_circle_symmetry_check(disk, tol=1e-15)


def test_disk_reconstruction_is_one():
    c = sine_coefficients(sample_sinogram(unit_disk(), SinogramGeometry(32)))
    img = oped_evaluate(c, FilterSpec(0.0, 0.9), 40)
    np.testing.assert_allclose(img.values[img.mask], 1.0, atol=1e-12)
    assert not img.values[~img.mask].any()


def test_linear_function_reconstruction():
    g = SinogramGeometry(16, 8)
    c = sine_coefficients(sample_sinogram(PolynomialImage({(1, 0): 1.0}), g))
    np.testing.assert_allclose(c.lam[1], np.cos(g.angles) / 2, atol=1e-14)
    np.testing.assert_allclose(np.delete(c.lam, 1, axis=0), 0.0, atol=1e-14)
    val = evaluate_points(c, FilterSpec(0.5, 0.9), np.array([0.3]), np.array([0.4]))
    assert val[0] == pytest.approx(0.3, abs=1e-10)


def test_chunked_and_threaded_evaluation_agree():
    c = sine_coefficients(sample_sinogram(shepp_logan(), SinogramGeometry(40)))
    f = FilterSpec(0.1, 0.9)
    a = oped_evaluate(c, f, 48)
    b = oped_evaluate(c, f, 48, workers=3, chunk=300)
    np.testing.assert_allclose(a.values, b.values, atol=1e-13)


def test_evaluation_needs_complete_coefficients():
    c = sine_coefficients(sample_sinogram(unit_disk(), SinogramGeometry(16, r=2)))
    with pytest.raises(ValueError, match="complete"):
        oped_evaluate(c, FilterSpec(), 8)


def _parity_pair(phantom, N):
    full = sine_coefficients(sample_sinogram(phantom, SinogramGeometry(N, N, 0, FULL_CIRCLE)))
    half = sine_coefficients(sample_sinogram(phantom, SinogramGeometry(N, N, 0, ODD_FULL_CIRCLE)))
    return full, half


def test_parity_head():
    full, half = _parity_pair(shepp_logan(), 9)
    assert parity_equivalence(full, half, FilterSpec(), 32) <= 1e-10


def test_parity_disk():
    full, half = _parity_pair(unit_disk(), 9)
    assert parity_equivalence(full, half, FilterSpec(), 32) <= 1e-13


def test_parity_random_ellipses():
    rng = np.random.default_rng(15)
    ellipses = []
    while len(ellipses) < 3:
        try:
            ellipses.append(
                Ellipse(*rng.uniform(-0.3, 0.3, 2), *rng.uniform(0.1, 0.5, 2), rng.uniform(0, math.pi), rng.uniform(-1, 1))
            )
        except ValueError:
            pass
    full, half = _parity_pair(EllipsePhantom(tuple(ellipses)), 15)
    assert parity_equivalence(full, half, FilterSpec(0.2, 0.5), 32) <= 1e-10


def test_parity_requires_odd():
    g = SinogramGeometry(8, 8, 0, FULL_CIRCLE)
    c = sine_coefficients(sample_sinogram(unit_disk(), g))
    with pytest.raises(ValueError):
        parity_equivalence(c, c, FilterSpec(), 8)
