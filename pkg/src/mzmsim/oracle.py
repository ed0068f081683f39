"""Brute-force many-body reference on the Fock space of up to 24 Majoranas.

Majoranas are represented by the Jordan-Wigner construction over the pairing
``d_k = (gamma_{2k-1} + i gamma_{2k})/2``. Basis index bit ``k-1`` holds the
occupation ``n_k`` (little-endian, ``n_1`` fastest), so ``-i gamma_1 gamma_2``
is diagonal with ``+1`` on even-``n_1`` states.

Operators are ``scipy.sparse`` CSR matrices except for propagators, which are
dense.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .stabilizer import MajoranaMonomial

MAX_MAJORANAS = 24


class PHSViolation(ValueError):
    """BdG matrix fails particle-hole symmetry."""


@dataclass(frozen=True)
class FockSpace:
    n_majoranas: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_majoranas
        if n <= 0 or n % 2:
            raise ValueError("n_majoranas must be a positive even integer")
        if n > MAX_MAJORANAS:
            raise ValueError(f"oracle is capped at {MAX_MAJORANAS} Majoranas, got {n}")

    @property
    def n_modes(self) -> int:
        return self.n_majoranas // 2

    @property
    def dimension(self) -> int:
        return 2 ** self.n_modes

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dimension, dtype=complex, format="csr")

    def index(self, occupations: Sequence[int]) -> int:
        return sum(int(b) << k for k, b in enumerate(occupations))

    def basis_state(self, occupations: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[self.index(occupations)] = 1
        return v


_X = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_Y = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))
_Z = sp.csr_matrix(np.diag([1, -1]).astype(complex))
_I = sp.identity(2, dtype=complex, format="csr")


def gamma(space: FockSpace, i: int) -> sp.csr_matrix:
    """``gamma_i`` as a Hermitian, unitary sparse matrix."""
    if not 1 <= i <= space.n_majoranas:
        raise ValueError(f"label {i} outside 1..{space.n_majoranas}")
    key = ("gamma", i)
    if key not in space._cache:
        site = (i + 1) // 2  # 1-based mode
        factors = [_Z] * (site - 1) + [_X if i % 2 else _Y] + [_I] * (space.n_modes - site)
        # mode 1 is the least significant bit: kron from the last mode down
        mat = reduce(lambda acc, f: sp.kron(f, acc, format="csr"), factors[1:], factors[0])
        space._cache[key] = mat.tocsr()
    return space._cache[key]


def monomial_matrix(space: FockSpace, m: MajoranaMonomial) -> sp.csr_matrix:
    out = space.identity() * m.phase
    for i in m.indices:
        out = out @ gamma(space, i)
    return out.tocsr()


def rotation(space: FockSpace, i: int, j: int, theta: float) -> sp.csr_matrix:
    """``exp(theta gamma_i gamma_j) = cos(theta) + sin(theta) gamma_i gamma_j``."""
    if i == j:
        raise ValueError("rotation needs two distinct labels")
    gg = gamma(space, i) @ gamma(space, j)
    return (np.cos(theta) * space.identity() + np.sin(theta) * gg).tocsr()


def braid(space: FockSpace, i: int, j: int) -> sp.csr_matrix:
    return rotation(space, i, j, np.pi / 4)


def projector(space: FockSpace, p: MajoranaMonomial, sign: int = 1) -> sp.csr_matrix:
    """``(1 + sign * p)/2`` for a Hermitian even monomial ``p``."""
    if len(p) % 2 or not p.is_hermitian():
        raise ValueError(f"{p} is not a Hermitian even monomial")
    return (0.5 * (space.identity() + sign * monomial_matrix(space, p))).tocsr()


# ---------------------------------------------------------------------------
# second-quantized lift of BdG matrices


def nambu_operators(space: FockSpace) -> list[sp.csr_matrix]:
    """``[c_1..c_M, c_1^dag..c_M^dag]`` with ``c_j = (gamma_{2j-1} + i gamma_{2j})/2``."""
    key = ("nambu",)
    if key not in space._cache:
        cs = [0.5 * (gamma(space, 2 * j - 1) + 1j * gamma(space, 2 * j))
              for j in range(1, space.n_modes + 1)]
        space._cache[key] = [c.tocsr() for c in cs] + [c.conj().T.tocsr() for c in cs]
    return space._cache[key]


def linear_operator(space: FockSpace, w: np.ndarray) -> sp.csr_matrix:
    """Many-body matrix of ``sum_a w_a Psi_a`` for a Nambu coefficient vector."""
    ops = nambu_operators(space)
    out = sp.csr_matrix((space.dimension, space.dimension), dtype=complex)
    for coef, op in zip(w, ops):
        if coef != 0:
            out = out + coef * op
    return out.tocsr()


def check_phs(h: np.ndarray, tol: float = 1e-10) -> None:
    m = h.shape[0] // 2
    tx = np.block([[np.zeros((m, m)), np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    res = np.max(np.abs(tx @ h.conj() @ tx + h), initial=0.0)
    if res > tol:
        raise PHSViolation(f"particle-hole residual {res:.2e}")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
        raise PHSViolation("BdG matrix is not Hermitian")


def lift_bdg(space: FockSpace, h: np.ndarray) -> sp.csr_matrix:
    """``H = 1/2 Psi^dag H_BdG Psi`` on the Fock space of ``M = n_modes`` sites."""
    if h.shape != (2 * space.n_modes,) * 2:
        raise ValueError(f"BdG matrix must be {2 * space.n_modes}x{2 * space.n_modes}")
    ops = nambu_operators(space)
    daggers = [op.conj().T for op in ops]
    out = sp.csr_matrix((space.dimension, space.dimension), dtype=complex)
    rows, cols = np.nonzero(np.abs(h) > 0)
    for a, b in zip(rows, cols):
        out = out + (0.5 * h[a, b]) * (daggers[a] @ ops[b])
    return out.tocsr()


def lift_bdg_cached(space: FockSpace, h: np.ndarray) -> sp.csr_matrix:
    """Same as :func:`lift_bdg` but reuses cached ``Psi_a^dag Psi_b`` products."""
    if h.shape != (2 * space.n_modes,) * 2:
        raise ValueError(f"BdG matrix must be {2 * space.n_modes}x{2 * space.n_modes}")
    cache = space._cache.setdefault("bilinears", {})
    ops = nambu_operators(space)
    out = sp.csr_matrix((space.dimension, space.dimension), dtype=complex)
    rows, cols = np.nonzero(np.abs(h) > 0)
    for a, b in zip(rows, cols):
        key = (int(a), int(b))
        if key not in cache:
            cache[key] = (ops[a].conj().T @ ops[b]).tocsr()
        out = out + (0.5 * h[a, b]) * cache[key]
    return out.tocsr()


def _expm_hermitian(h: np.ndarray, dt: float) -> np.ndarray:
    e, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * e * dt)) @ v.conj().T


def quadratic_hamiltonian_evolution(space: FockSpace, h_of_t: Callable[[float], np.ndarray],
                                    t_grid: Sequence[float], checkpoints: Sequence[float] = (),
                                    ) -> np.ndarray | tuple[np.ndarray, dict[float, np.ndarray]]:
    """Time-ordered product of midpoint exponentials of the lifted Hamiltonian.

    With ``checkpoints`` the propagators ``U(t_c, t_grid[0])`` at those grid
    times are returned as well.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    u = np.eye(space.dimension, dtype=complex)
    marks = {float(c) for c in checkpoints}
    saved = {}
    if t_grid[0] in marks:
        saved[float(t_grid[0])] = u.copy()
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        h = h_of_t(0.5 * (t0 + t1))
        check_phs(h)
        hm = lift_bdg(space, h).toarray()
        u = _expm_hermitian(hm, t1 - t0) @ u
        if float(t1) in marks:
            saved[float(t1)] = u.copy()
    if checkpoints:
        missing = marks - saved.keys()
        if missing:
            raise ValueError(f"checkpoints {sorted(missing)} are not grid points")
        return u, saved
    return u


def vacuum_of(annihilators: Sequence[sp.csr_matrix]) -> np.ndarray:
    """Unit vector annihilated by every operator in the list (global phase fixed
    by making the largest component real positive)."""
    n_op = sum((a.conj().T @ a for a in annihilators), start=0 * annihilators[0])
    e, v = np.linalg.eigh(n_op.toarray())
    if abs(e[0]) > 1e-8 or (len(e) > 1 and e[1] < 1e-8):
        raise ValueError("operators do not define a unique common vacuum")
    vec = v[:, 0]
    k = np.argmax(np.abs(vec))
    return vec * (abs(vec[k]) / vec[k])
