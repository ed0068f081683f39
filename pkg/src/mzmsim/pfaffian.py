"""Pfaffians of complex skew-symmetric matrices.

Parlett-Reid tridiagonalization with partial pivoting, following the LTL
route used by pfapack. The log-domain variant returns ``(sign, log|pf|)`` so
that products of many small overlaps do not underflow.
"""
from __future__ import annotations

import numpy as np


class NotSkewSymmetric(ValueError):
    pass


def _check(a: np.ndarray, tol: float) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("Pfaffian needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if np.max(np.abs(a + a.T), initial=0.0) > tol * scale:
        raise NotSkewSymmetric("matrix is not skew-symmetric")
    return a.copy()


def _reduce(a: np.ndarray):
    """Yield the pivots ``a[k, k+1]`` and the row-swap signs of the Parlett-Reid
    elimination. Returns ``None`` pivots as soon as a zero pivot is found."""
    n = a.shape[0]
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        swapped = kp != k + 1
        if swapped:
            a[[k + 1, kp], k:] = a[[kp, k + 1], k:]
            a[k:, [k + 1, kp]] = a[k:, [kp, k + 1]]
        pivot = a[k + 1, k]
        if pivot == 0:
            yield None, swapped
            return
        yield a[k, k + 1], swapped
        if k + 2 < n:
            tau = a[k, k + 2:, None] / a[k, k + 1]
            col = a[None, k + 2:, k + 1]
            # rank-2 update of the trailing block
            a[k + 2:, k + 2:] += tau * col - col.T * tau.T


def pfaffian(a: np.ndarray, tol: float = 1e-10) -> complex:
    """Pfaffian of a skew-symmetric matrix. Odd dimension gives 0."""
    a = _check(a, tol)
    n = a.shape[0]
    if n % 2:
        return 0j
    result = 1.0 + 0j
    for piv, swapped in _reduce(a):
        if piv is None:
            return 0j
        result *= -piv if swapped else piv
    return complex(result)


def log_pfaffian(a: np.ndarray, tol: float = 1e-10) -> tuple[complex, float]:
    """Return ``(phase, log|pf(a)|)`` with ``pf(a) = phase * exp(log|pf|)``.

    A vanishing Pfaffian is reported as ``(0, -inf)``.
    """
    a = _check(a, tol)
    n = a.shape[0]
    if n % 2:
        return 0j, -np.inf
    phase = 1.0 + 0j
    logabs = 0.0
    for piv, swapped in _reduce(a):
        if piv is None:
            return 0j, -np.inf
        mag = abs(piv)
        phase *= (-piv if swapped else piv) / mag
        logabs += np.log(mag)
    return complex(phase), float(logabs)


def pfaffian_bruteforce(a: np.ndarray) -> complex:
    """Sum over perfect matchings; exponential cost, for testing only."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n % 2:
        return 0j
    if n == 0:
        return 1 + 0j
    total = 0j
    # expand along the first row: pf(A) = sum_j (-1)^(j+1) a_0j pf(A without 0, j)
    for j in range(1, n):
        rest = [k for k in range(1, n) if k != j]
        sign = -1 if (j % 2 == 0) else 1
        total += sign * a[0, j] * pfaffian_bruteforce(a[np.ix_(rest, rest)])
    return total
