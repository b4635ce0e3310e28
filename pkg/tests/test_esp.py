import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import dpp_table, random_psd, subsets

from multidescent import (
    DegenerateError,
    DomainError,
    Spectrum,
    convexity_probe,
    dpp_expected_error,
    dpp_expected_size,
    dpp_size_pmf,
    esp,
    kdpp_expected_error,
    newton_ratio_check,
)
from multidescent.esp import esp_prefix_ratios, kdpp_error_curve


@pytest.mark.parametrize(
    "lam, expected",
    [((1, 1, 1), (1, 3, 3, 1)), ((2, 1), (1, 3, 2)), ((4, 1), (1, 5, 4))],
)
def test_esp_examples(lam, expected):
    np.testing.assert_allclose(esp(lam).values, expected, rtol=1e-15)


def test_esp_against_enumeration(rng):
    lam = np.sort(rng.exponential(size=7))[::-1]
    ref = [sum(math.prod(lam[list(T)]) for T in subsets(7, k)) for k in range(8)]
    np.testing.assert_allclose(esp(lam).values, ref, rtol=1e-13)


def test_esp_zero_beyond_rank():
    e = esp([3.0, 1.0, 0.0, 0.0])
    assert e[3] == 0 and e[4] == 0 and e[0] == 1


def test_esp_long_spectrum_no_overflow():
    lam = np.full(2000, 10.0)
    e = esp(lam)
    logs = e.log()
    k = np.arange(2001)
    ref = np.array([math.lgamma(2001) - math.lgamma(j + 1) - math.lgamma(2001 - j) for j in k]) + k * math.log(10)
    np.testing.assert_allclose(logs, ref, rtol=1e-12, atol=1e-9)
    assert kdpp_expected_error(lam, 1000) == pytest.approx(1001 * 10 * 1000 / 1001, rel=1e-10)


def test_esp_tiny_spectrum_no_underflow():
    lam = np.arange(1, 2001, dtype=float) ** -2.0
    e = esp(lam)
    assert np.isfinite(e.log()[-1])
    assert e.log()[-1] == pytest.approx(-2 * math.lgamma(2001), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=9), st.floats(0.01, 100))
def test_scaling_covariance(lam, c):
    lam = np.sort(lam)[::-1]
    e, ec = esp(lam), esp(c * lam)
    for k in range(lam.size + 1):
        assert ec.log()[k] == pytest.approx(e.log()[k] + k * math.log(c), abs=1e-10 * (1 + abs(e.log()[k])))
    for k in range(lam.size):
        assert kdpp_expected_error(c * lam, k) == pytest.approx(c * kdpp_expected_error(lam, k), rel=1e-11)


class TestKdppExpectation:
    def test_examples(self):
        assert kdpp_expected_error([4, 1], 1) == pytest.approx(1.6)
        assert kdpp_expected_error([4, 1], 0) == pytest.approx(5)
        assert kdpp_expected_error([2, 1], 1) == pytest.approx(4 / 3)

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            kdpp_expected_error([1.0, 0.0], 1)
        with pytest.raises(DegenerateError):
            kdpp_expected_error([1.0, 1.0], 2)


class TestDppExpectation:
    def test_size_examples(self):
        assert dpp_expected_size([1, 1], 1) == pytest.approx(1.0)
        assert dpp_expected_size([3, 1], 1) == pytest.approx(1.25)

    def test_size_vanishes(self):
        lam = np.array([5.0, 2.0, 1.0])
        assert dpp_expected_size(lam, 1e12 * lam[0]) <= lam.size * 1e-12

    def test_error_examples(self):
        assert dpp_expected_error([4, 1], 1) == pytest.approx(1.3)
        assert dpp_expected_error([1], 1) == pytest.approx(0.5)
        assert dpp_expected_error([4, 1], 1e-12) == pytest.approx(0, abs=1e-11)

    def test_alpha_domain(self):
        for f in (dpp_expected_size, dpp_expected_error, dpp_size_pmf):
            with pytest.raises(DomainError):
                f([1.0], 0.0)

    def test_pmf_examples(self):
        np.testing.assert_allclose(dpp_size_pmf([4, 1], 1), [0.1, 0.5, 0.4])
        np.testing.assert_allclose(dpp_size_pmf([1], 1), [0.5, 0.5])
        np.testing.assert_allclose(dpp_size_pmf([1, 1, 1], 1), np.array([1, 3, 3, 1]) / 8)

    def test_pmf_matches_enumeration(self, rng):
        for _ in range(10):
            lam = np.sort(rng.exponential(size=int(rng.integers(1, 8))))[::-1]
            K = random_psd(rng, lam)
            alpha = float(rng.choice([0.1, 1, 10]))
            table = dpp_table(K, alpha)
            marg = np.zeros(lam.size + 1)
            for S, p in table.items():
                marg[len(S)] += p
            pmf = dpp_size_pmf(lam, alpha)
            assert pmf.sum() == pytest.approx(1, abs=1e-12)
            np.testing.assert_allclose(pmf, marg, atol=1e-12)


class TestNewton:
    def test_flat_three(self):
        np.testing.assert_allclose(newton_ratio_check([1, 1, 1]), [2 / 3, 1 / 2])

    def test_two(self):
        np.testing.assert_allclose(newton_ratio_check([4, 1]), [0.32])

    def test_flat_strictly_decreasing(self):
        r = newton_ratio_check(np.ones(12))
        assert np.all(np.diff(r) < 0)

    def test_rank_one(self):
        with pytest.raises(DegenerateError):
            newton_ratio_check([1.0, 0.0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=30))
    def test_bounded_by_one(self, lam):
        assert np.all(newton_ratio_check(np.sort(lam)[::-1]) <= 1 + 1e-9)


class TestConvexity:
    def test_flat(self):
        rep = convexity_probe([1, 1, 1, 1])
        f = kdpp_error_curve([1, 1, 1, 1])
        np.testing.assert_allclose(f, [4, 3, 2, 1])
        assert rep.min_second_difference == pytest.approx(0, abs=1e-12)
        assert rep.convex

    def test_geometric(self):
        rep = convexity_probe([8, 4, 2, 1])
        f = kdpp_error_curve([8, 4, 2, 1])
        d2 = f[2:] + f[:-2] - 2 * f[1:-1]
        assert rep.min_second_difference == pytest.approx(d2.min())
        assert rep.argmin_k == int(np.argmin(d2)) + 1

    def test_too_short(self):
        with pytest.raises(DegenerateError):
            convexity_probe([2.0, 1.0])


def test_prefix_ratios_are_probabilities(rng):
    lam = np.sort(rng.exponential(size=10))[::-1]
    out = esp_prefix_ratios(lam, 4)
    assert np.all((out >= 0) & (out <= 1))
    # with l items left among the first l eigenvalues, every one must be kept
    for l in range(1, 5):
        assert out[l - 1, l] == pytest.approx(1)


def test_spectrum_object_accepted():
    s = Spectrum.from_eigenvalues([4.0, 1.0])
    assert kdpp_expected_error(s, 1) == pytest.approx(1.6)
