"""Vacuum expectation values of products of linear fermion operators.

Every operator handled here is linear in the bare Nambu operators,
``a = w^T Psi``. Against the initial quasiparticle frame ``F0`` its
coefficients are ``alpha = F0^T w`` (``a = alpha^T (d, d^dag)``), so the
elementary contraction is ``<0_d| a b |0_d> = sum_k alpha_k beta_{M+k}``.

The evolved vacuum ``U|0_d>`` is written with the Bloch-Messiah (BM) data of
the Bogoliubov pair ``(X, Y)`` as

    |0_d(t)> = prod_{k in P} dbar_k dbar_kbar prod_{k in O} dbar_k |0_d> / sqrt(N),
    N = prod_{k in P} y_k^2,

where ``P`` (paired) and ``O`` (occupied) are the BM blocks and ``dbar`` the
rotated evolved quasiparticles. The global phase of this representative is not
fixed by ``(X, Y)``; amplitudes built from it share one undetermined phase.

An amplitude ``<m| A |n(t)>`` is ``s_m / sqrt(N)`` times the Pfaffian of the
contraction matrix of the operator sequence

    [d_{m_1} .. d_{m_r}] [A] [d^dag_{n_1}(t) .. d^dag_{n_s}(t)] [builders],

with ``s_m = (-1)^(r(r-1)/2)`` from reversing the bra's creation string.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bdg import tau_x
from .evolution import BogoliubovXY, CanonicityViolation
from .pfaffian import log_pfaffian, pfaffian

EPS_BM = 1e-8
UNDERFLOW = 1e-300


class NormalizationUnderflow(FloatingPointError):
    """Evolved and reference vacua are numerically orthogonal."""


@dataclass(frozen=True)
class BlochMessiahForm:
    """``X = C Xbar D^dag`` and ``Y = C^* Ybar D^dag``.

    Block bookkeeping: ``empty`` and ``occupied`` hold column indices,
    ``pairs`` holds ``(k, kbar)`` column pairs with coefficients ``x[k]`` and
    ``y[k]`` (``Ybar[k, kbar] = y``, ``Ybar[kbar, k] = -y``).
    """

    C: np.ndarray
    D: np.ndarray
    Xbar: np.ndarray
    Ybar: np.ndarray
    empty: tuple[int, ...]
    occupied: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    x: np.ndarray
    y: np.ndarray

    def reconstruction_residual(self, xy: BogoliubovXY) -> tuple[float, float]:
        rx = np.linalg.norm(xy.X - self.C @ self.Xbar @ self.D.conj().T)
        ry = np.linalg.norm(xy.Y - self.C.conj() @ self.Ybar @ self.D.conj().T)
        return float(rx), float(ry)


def _orthonormal_complement(basis: np.ndarray, space: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(space)`` minus ``span(basis)``."""
    if basis.shape[1]:
        space = space - basis @ (basis.conj().T @ space)
    u, s, _ = np.linalg.svd(space, full_matrices=False)
    return u[:, s > 1e-6]


def _youla_pairs(group: np.ndarray, k_mat: np.ndarray, sval: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a degenerate subspace into vector pairs ``(c1, c2)`` with
    ``c1^T K c2 = sval`` for the skew matrix ``K = Y X^dag``."""
    pairs = []
    taken = np.zeros((group.shape[0], 0), dtype=complex)
    remaining = group
    while remaining.shape[1] >= 2:
        c1 = remaining[:, 0]
        c2 = (k_mat.T @ c1).conj() / sval
        c2 = c2 - taken @ (taken.conj().T @ c2) - c1 * np.vdot(c1, c2)
        c2 = c2 / np.linalg.norm(c2)
        pairs.append((c1, c2))
        taken = np.hstack([taken, c1[:, None], c2[:, None]])
        remaining = _orthonormal_complement(taken, remaining)
    if remaining.shape[1]:
        raise CanonicityViolation("paired block has odd dimension")
    return pairs


def bloch_messiah(xy: BogoliubovXY, eps: float = EPS_BM, degeneracy: float = 1e-8,
                  tol: float = 1e-7) -> BlochMessiahForm:
    """BM decomposition of a canonical Bogoliubov pair.

    ``C`` diagonalizes ``conj(Y Y^dag)``; eigenvalues below ``eps`` are empty,
    above ``1 - eps`` occupied, the rest paired. Within each degenerate paired
    group the columns are rotated into the canonical ``i sigma_y`` form.
    ``D`` follows from ``X`` (``D = X^dag C / x``) or, where ``x`` is small,
    from ``Y``.

    Raises:
        CanonicityViolation: if ``X^dag X + Y^dag Y = 1`` fails beyond ``tol``.
    """
    xy.check(tol)
    X, Y = xy.X, xy.Y
    m = X.shape[0]
    lam, vec = np.linalg.eigh((Y @ Y.conj().T).conj())
    lam = np.clip(lam, 0.0, 1.0)
    empty = [k for k in range(m) if lam[k] < eps]
    occ = [k for k in range(m) if lam[k] > 1 - eps]
    mid = [k for k in range(m) if eps <= lam[k] <= 1 - eps]

    cols: list[np.ndarray] = []
    kinds: list[str] = []
    xs: list[float] = []
    ys: list[float] = []
    for k in empty:
        cols.append(vec[:, k]); kinds.append("E"); xs.append(1.0); ys.append(0.0)
    k_mat = Y @ X.conj().T
    i = 0
    while i < len(mid):
        j = i
        while j + 1 < len(mid) and lam[mid[j + 1]] - lam[mid[i]] <= degeneracy * max(1.0, lam[mid[i]]) + eps:
            j += 1
        idx = mid[i: j + 1]
        lval = float(np.mean(lam[idx]))
        yv, xv = np.sqrt(lval), np.sqrt(1.0 - lval)
        for c1, c2 in _youla_pairs(vec[:, idx], k_mat, xv * yv):
            cols.extend([c1, c2]); kinds.extend(["P", "Q"])
            xs.extend([xv, xv]); ys.extend([yv, yv])
        i = j + 1
    for k in occ:
        cols.append(vec[:, k]); kinds.append("O"); xs.append(0.0); ys.append(1.0)

    C = np.stack(cols, axis=1) if cols else np.zeros((m, 0), dtype=complex)
    x = np.asarray(xs)
    y = np.asarray(ys)
    D = np.zeros((m, m), dtype=complex)
    Xbar = np.zeros((m, m))
    Ybar = np.zeros((m, m))
    pairs = []
    for k, kind in enumerate(kinds):
        if kind == "E":
            D[:, k] = X.conj().T @ C[:, k]
            Xbar[k, k] = 1.0
        elif kind == "O":
            D[:, k] = Y.conj().T @ C[:, k].conj()
            Ybar[k, k] = 1.0
        elif kind == "P":
            kb = k + 1
            pairs.append((k, kb))
            Xbar[k, k] = Xbar[kb, kb] = x[k]
            Ybar[k, kb], Ybar[kb, k] = y[k], -y[k]
            if x[k] >= y[k]:
                D[:, k] = X.conj().T @ C[:, k] / x[k]
                D[:, kb] = X.conj().T @ C[:, kb] / x[k]
            else:
                # Y D = C^* Ybar: column kb of C^* Ybar is y C^*_k, column k is -y C^*_kb
                D[:, kb] = Y.conj().T @ C[:, k].conj() / y[k]
                D[:, k] = -Y.conj().T @ C[:, kb].conj() / y[k]
    return BlochMessiahForm(C, D, Xbar, Ybar, tuple(k for k, s in enumerate(kinds) if s == "E"),
                            tuple(k for k, s in enumerate(kinds) if s == "O"), tuple(pairs), x, y)


@dataclass(frozen=True)
class CommonVacuum:
    """Vacuum-builder operators of the evolved vacuum in bare Nambu form.

    Attributes:
        builders: rows ``w`` of the builder string (``a = w^T Psi``), in the
            order they appear to the right of the amplitude's operator string.
        log_norm: ``log N`` with ``N = prod_P y_k^2``.
        underflow: True if some ``y_k^2`` is below ``1e-300``.
    """

    builders: np.ndarray
    log_norm: float
    underflow: bool

    @property
    def norm(self) -> float:
        return float(np.exp(self.log_norm))


def build_common_vacuum(bm: BlochMessiahForm, frame_t: np.ndarray) -> CommonVacuum:
    """Builders ``dbar_j = sum_i conj(D_ij) d_i(t, 0)`` for paired and occupied blocks.

    ``frame_t`` is the evolved frame whose columns give ``d_i(t, 0)``.
    """
    m = frame_t.shape[0] // 2
    dbar_psi = frame_t[:, :m] @ bm.D  # dbar_j = (column j)^dag Psi
    rows = []
    log_n = 0.0
    under = False
    for k, kb in bm.pairs:
        rows.append(dbar_psi[:, k].conj())
        rows.append(dbar_psi[:, kb].conj())
        y2 = bm.y[k] ** 2
        if y2 < UNDERFLOW:
            under = True
        log_n += np.log(max(y2, np.finfo(float).tiny))
    for k in bm.occupied:
        rows.append(dbar_psi[:, k].conj())
    b = np.array(rows, dtype=complex).reshape(len(rows), 2 * m)
    return CommonVacuum(b, float(log_n), under)


# ---------------------------------------------------------------------------
# operator rows


def annihilator_rows(frame: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Rows for ``d_k`` with ``d_k = psi_k^dag Psi`` (``k`` zero-based)."""
    m = frame.shape[0] // 2
    return np.array([frame[:, k].conj() for k in modes], dtype=complex).reshape(len(modes), 2 * m)


def creator_rows(frame: np.ndarray, modes: Sequence[int]) -> np.ndarray:
    """Rows for ``d_k^dag`` (``w = tau_x psi_k``)."""
    m = frame.shape[0] // 2
    tx = tau_x(m)
    return np.array([tx @ frame[:, k] for k in modes], dtype=complex).reshape(len(modes), 2 * m)


def dagger_row(w: np.ndarray) -> np.ndarray:
    m = w.shape[-1] // 2
    return (tau_x(m) @ np.asarray(w).conj().T).T


@dataclass(frozen=True)
class ContractionTable:
    """Elementary contractions of a row sequence against ``|0_d>``.

    ``blocks`` names contiguous row ranges (for reporting); ``matrix`` is the
    skew-symmetric matrix with upper triangle ``<0_d| a_i a_j |0_d>``.
    """

    matrix: np.ndarray
    blocks: dict[str, tuple[int, int]]


def contraction_table(frame0: np.ndarray, segments: Sequence[tuple[str, np.ndarray]]) -> ContractionTable:
    m = frame0.shape[0] // 2
    rows = [r for _, r in segments if len(r)]
    if rows:
        w = np.vstack(rows)
    else:
        w = np.zeros((0, 2 * m), dtype=complex)
    alpha = w @ frame0  # alpha_i = F0^T w_i, stored as rows
    full = alpha[:, :m] @ alpha[:, m:].T
    upper = np.triu(full, 1)
    mat = upper - upper.T
    blocks, start = {}, 0
    for name, r in segments:
        blocks[name] = (start, start + len(r))
        start += len(r)
    return ContractionTable(mat, blocks)


@dataclass(frozen=True)
class Frames:
    """Everything an amplitude needs: the initial frame, the evolved frame at
    the final time and the common-vacuum builders."""

    frame0: np.ndarray
    frame_t: np.ndarray
    vacuum: CommonVacuum

    @classmethod
    def build(cls, frame0: np.ndarray, frame_t: np.ndarray) -> "Frames":
        from .evolution import bogoliubov_xy

        bm = bloch_messiah(bogoliubov_xy(frame0, frame_t))
        return cls(frame0, frame_t, build_common_vacuum(bm, frame_t))


def vacuum_expectation(m_occ: Sequence[int], a_rows: np.ndarray, n_occ: Sequence[int], frames: Frames,
                       coefficient: complex = 1.0, log_domain: bool = False) -> complex:
    """``coefficient * <m| A |n(t)>`` with ``A`` given as operator rows.

    ``m_occ`` and ``n_occ`` are occupation vectors over the leading modes of
    the frames (mode 1 first); ``|n> = d^dag_{j1} .. d^dag_{js} |0_d>`` with
    ascending ``j``.

    Raises:
        NormalizationUnderflow: if the evolved vacuum is numerically orthogonal
            to the reference vacuum.
    """
    if frames.vacuum.underflow:
        raise NormalizationUnderflow("vacuum normalization underflows (y_k^2 < 1e-300)")
    m_modes = [k for k, b in enumerate(m_occ) if b]
    n_modes = [k for k, b in enumerate(n_occ) if b]
    r = len(m_modes)
    s_m = -1.0 if (r * (r - 1) // 2) % 2 else 1.0
    a_rows = np.asarray(a_rows, dtype=complex).reshape(-1, frames.frame0.shape[0])
    table = contraction_table(frames.frame0, [
        ("m", annihilator_rows(frames.frame0, m_modes)),
        ("A", a_rows),
        ("n", creator_rows(frames.frame_t, n_modes)),
        ("vac", frames.vacuum.builders),
    ])
    if table.matrix.shape[0] % 2:
        return 0j
    if log_domain:
        phase, logabs = log_pfaffian(table.matrix)
        if phase == 0:
            return 0j
        return coefficient * s_m * phase * np.exp(logabs - 0.5 * frames.vacuum.log_norm)
    return coefficient * s_m * pfaffian(table.matrix) * np.exp(-0.5 * frames.vacuum.log_norm)
