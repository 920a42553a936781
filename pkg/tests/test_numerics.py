import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from adjvt.numerics import (Tolerance, find_root_monotone, log_truncated_mass, std_normal_cdf,
                            std_normal_pdf, std_normal_sf, truncated_conditional_mean,
                            truncated_first_moment, truncated_mass)

finite = st.floats(-8, 8, allow_nan=False)


def test_pdf_values():
    assert std_normal_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)
    assert std_normal_pdf(1.0) == pytest.approx(0.2419707245, abs=1e-10)
    assert std_normal_pdf(1.7) == std_normal_pdf(-1.7)


def test_cdf_values():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(-1.0) == pytest.approx(0.1586552539, abs=1e-10)
    assert abs(std_normal_cdf(40.0) - 1.0) <= 1e-15
    assert std_normal_cdf(math.inf) == 1.0 and std_normal_cdf(-math.inf) == 0.0


def test_cdf_against_high_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for x in np.linspace(-12, 12, 241):
        exact = float(mpmath.ncdf(x))
        assert abs(std_normal_cdf(float(x)) - exact) < 1e-12


def test_cdf_symmetry_random(rng):
    xs = rng.uniform(-8, 8, 10_000)
    worst = max(abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) for x in xs)
    assert worst <= 2e-12


@given(finite, finite)
def test_cdf_monotone(x, y):
    lo, hi = min(x, y), max(x, y)
    assert std_normal_cdf(lo) <= std_normal_cdf(hi)


def test_sf_matches_complement_in_tail():
    assert std_normal_sf(10.0) == pytest.approx(special.ndtr(-10.0), rel=1e-12)


def test_truncated_mass_examples():
    assert truncated_mass(0.0, -math.inf, 0.0) == 0.5
    assert truncated_mass(1.3, 0.2, 0.2) == 0.0
    assert truncated_mass(-2.5, -math.inf, -0.9111) == pytest.approx(0.94396, abs=1e-5)
    with pytest.raises(ValueError):
        truncated_mass(0.0, 1.0, 0.0)


def test_truncated_first_moment_examples():
    assert truncated_first_moment(0.7, -math.inf, math.inf) == pytest.approx(0.7, abs=1e-15)
    assert truncated_first_moment(0.0, -1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert truncated_first_moment(0.0, -math.inf, 0.0) == pytest.approx(-0.3989423, abs=1e-7)
    with pytest.raises(ValueError):
        truncated_first_moment(0.0, 1.0, 0.0)


@given(st.floats(-5, 5), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_first_moment_additive(m, pts):
    a, b, c = sorted(pts)
    whole = truncated_first_moment(m, a, c)
    parts = truncated_first_moment(m, a, b) + truncated_first_moment(m, b, c)
    assert abs(whole - parts) <= 1e-12


@given(st.floats(-5, 5), st.lists(st.floats(-10, 10), min_size=0, max_size=8))
def test_masses_over_a_partition_sum_to_one(m, cuts):
    edges = [-math.inf] + sorted(cuts) + [math.inf]
    total = sum(truncated_mass(m, lo, hi) for lo, hi in zip(edges[:-1], edges[1:]))
    assert abs(total - 1.0) <= 1e-12


def test_first_moment_against_quadrature(rng):
    for _ in range(100):
        m = rng.uniform(-5, 5)
        a, b = sorted(rng.uniform(-10, 10, 2))
        ref, _ = integrate.quad(lambda x: x * std_normal_pdf(x - m), a, b, epsabs=1e-13, epsrel=1e-13,
                                points=[m] if a < m < b else None, limit=200)
        assert abs(truncated_first_moment(m, a, b) - ref) <= 1e-9


@pytest.mark.parametrize("m,a,b", [(0.0, 5.0, 7.0), (3.0, -40.0, -30.0), (-2.0, 1.0, math.inf),
                                   (0.5, -math.inf, -20.0), (0.0, -1.0, 1.0)])
def test_stable_tail_helpers(m, a, b):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    za, zb = mpmath.mpf(a - m), mpmath.mpf(b - m)
    mass = mpmath.ncdf(zb) - mpmath.ncdf(za)
    first = m * mass - (mpmath.npdf(zb) - mpmath.npdf(za))
    assert float(log_truncated_mass(m, a, b)) == pytest.approx(float(mpmath.log(mass)), rel=1e-12)
    assert float(truncated_conditional_mean(m, a, b)) == pytest.approx(float(first / mass), rel=1e-10, abs=1e-12)


def test_root_examples():
    assert find_root_monotone(lambda x: x - 1, 0, 2) == pytest.approx(1.0, abs=1e-12)
    assert find_root_monotone(lambda x: std_normal_cdf(x) - 0.5, -3, 3) == pytest.approx(0.0, abs=1e-12)
    assert find_root_monotone(lambda x: x ** 3 - 2, 0, 2) == pytest.approx(2 ** (1 / 3), abs=1e-8)
    assert find_root_monotone(lambda x: x * x + 1, -1, 1) is None


def test_root_respects_max_eval():
    calls = []

    def f(x):
        calls.append(x)
        return x - 0.3

    find_root_monotone(f, 0.0, 1.0, Tolerance(abs_tol=1e-300, max_eval=15))
    assert len(calls) <= 15


@given(st.floats(-0.99, 0.99))
def test_root_round_trip(y):
    f = lambda x: math.tanh(x) + 0.1 * x
    lo, hi = -4.0, 4.0
    root = find_root_monotone(lambda x: f(x) - y, lo, hi)
    assert abs(f(root) - y) <= 1e-11


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(abs_tol=0.0)
    with pytest.raises(ValueError):
        Tolerance(rel_tol=-1.0)
    with pytest.raises(ValueError):
        Tolerance(max_eval=0)
