"""Pfaffian routines against determinants and the matching expansion."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzmsim.pfaffian import NotSkewSymmetric, log_pfaffian, pfaffian, pfaffian_bruteforce


def random_skew(n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    a = scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return a - a.T


class TestPfaffian:
    @pytest.mark.parametrize("a, expected", [
        (np.array([[0, 3.0], [-3.0, 0]]), 3.0),
        (np.zeros((0, 0)), 1.0),
        (np.zeros((4, 4)), 0.0),
    ])
    def test_small_cases(self, a, expected):
        assert pfaffian(a) == pytest.approx(expected)

    def test_four_by_four_closed_form(self):
        a = random_skew(4, 0)
        expected = a[0, 1] * a[2, 3] - a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2]
        assert pfaffian(a) == pytest.approx(expected, rel=1e-12)

    def test_block_diagonal_product(self):
        vals = [1.5, -0.3j, 2.0 + 1.0j]
        a = np.zeros((6, 6), dtype=complex)
        for k, v in enumerate(vals):
            a[2 * k, 2 * k + 1], a[2 * k + 1, 2 * k] = v, -v
        assert pfaffian(a) == pytest.approx(np.prod(vals), rel=1e-14)

    @pytest.mark.parametrize("n", [3, 5, 7])
    def test_odd_dimension(self, n):
        assert pfaffian(random_skew(n, n)) == 0
        assert log_pfaffian(random_skew(n, n)) == (0, -np.inf)

    @given(st.integers(1, 4), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_bruteforce(self, half, seed):
        a = random_skew(2 * half, seed)
        assert abs(pfaffian(a) - pfaffian_bruteforce(a)) < 1e-10 * max(1.0, abs(pfaffian_bruteforce(a)))

    @given(st.integers(1, 12), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_square_is_determinant(self, half, seed):
        a = random_skew(2 * half, seed)
        pf = pfaffian(a)
        det = np.linalg.det(a)
        assert abs(pf ** 2 - det) < 1e-9 * max(1.0, abs(det))

    def test_congruence(self):
        a = random_skew(6, 1)
        b = np.random.default_rng(2).normal(size=(6, 6))
        assert pfaffian(b @ a @ b.T) == pytest.approx(np.linalg.det(b) * pfaffian(a), rel=1e-10)

    def test_pivoting_handles_zero_leading_entry(self):
        a = random_skew(6, 3)
        a[0, 1] = a[1, 0] = 0.0
        assert pfaffian(a) == pytest.approx(pfaffian_bruteforce(a), rel=1e-12)

    def test_rejects_non_skew(self):
        with pytest.raises(NotSkewSymmetric):
            pfaffian(np.ones((2, 2)))
        with pytest.raises(ValueError):
            pfaffian(np.zeros((2, 3)))


class TestLogPfaffian:
    @given(st.integers(1, 10), st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_matches_linear(self, half, seed):
        a = random_skew(2 * half, seed)
        phase, logabs = log_pfaffian(a)
        assert phase * np.exp(logabs) == pytest.approx(pfaffian(a), rel=1e-10)
        assert abs(phase) == pytest.approx(1.0)

    def test_no_underflow(self):
        a = random_skew(400, 5, scale=1e-5)
        assert pfaffian(a) == 0 or abs(pfaffian(a)) < 1e-300
        phase, logabs = log_pfaffian(a)
        assert np.isfinite(logabs) and logabs < -1000
        # scaling law pf(c A) = c^(n/2) pf(A)
        _, ref = log_pfaffian(a * 1e5)
        assert logabs == pytest.approx(ref + 200 * np.log(1e-5), rel=1e-10)

    def test_singular(self):
        assert log_pfaffian(np.zeros((4, 4))) == (0, -np.inf)
