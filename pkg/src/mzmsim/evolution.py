"""Time-dependent BdG propagation and Bogoliubov matrices between frames.

A frame is the ``2M x 2M`` unitary ``F = [psi_1..psi_M | tau_x psi_1^*..tau_x psi_M^*]``
so that ``Psi = F Phi`` with ``Phi = (d, d^dag)`` and ``d_k = psi_k^dag Psi``.

Conventions for the evolution operator ``U(t, t0)`` of the many-body problem:
the single-particle propagator ``S(t, t0)`` solves ``i dS/dt = H_BdG(t) S`` and
satisfies ``U Psi U^dag = S^dag Psi``. Evolving the columns of a frame,
``psi_k(t) = S psi_k(t0)``, therefore yields ``d_k(t, t0) = U d_k U^dag``, the
operators that annihilate the evolved vacuum ``U |0_d>``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .bdg import WireNetwork, assemble, tau_x


class UnitarityLoss(RuntimeError):
    pass


class CanonicityViolation(ValueError):
    pass


@dataclass(frozen=True)
class WavefunctionSet:
    """Columns ``psi_k(t, t0)`` and their particle-hole partners.

    Attributes:
        frame: ``2M x 2M`` unitary; the first ``M`` columns are the ``psi_k``.
        energies: ``E_k`` of the ``t0`` diagonalization, zero modes first.
        t0: reference time of the diagonalization.
        t: time the columns have been propagated to.
        n_zero: number of zero-mode fermions (``2 n_zero`` Majoranas) at the
            front of the frame.
    """

    frame: np.ndarray
    energies: np.ndarray
    t0: float = 0.0
    t: float = 0.0
    n_zero: int = 0

    @property
    def n_modes(self) -> int:
        return self.frame.shape[0] // 2

    @property
    def psi(self) -> np.ndarray:
        return self.frame[:, : self.n_modes]

    def unitarity_residual(self) -> float:
        f = self.frame
        return float(np.max(np.abs(f.conj().T @ f - np.eye(f.shape[0]))))

    def phs_residual(self) -> float:
        m = self.n_modes
        tx = tau_x(m)
        return float(np.max(np.abs(tx @ self.frame[:, :m].conj() - self.frame[:, m:])))


def frame_from_psi(psi: np.ndarray) -> np.ndarray:
    """Complete ``M`` quasiparticle columns with their partners ``tau_x psi^*``."""
    m = psi.shape[0] // 2
    return np.hstack([psi, tau_x(m) @ psi.conj()])


# ---------------------------------------------------------------------------
# zero-mode Majoranas


def reference_majoranas(n_sites: int, site: int) -> tuple[np.ndarray, np.ndarray]:
    """Nambu vectors of ``c + c^dag`` and ``i(c^dag - c)`` on ``site``.

    A Majorana ``gamma = w^T Psi`` needs ``w = tau_x w^*`` and ``|w|^2 = 2``.
    """
    a = np.zeros(2 * n_sites, dtype=complex)
    a[site] = a[n_sites + site] = 1.0
    b = np.zeros(2 * n_sites, dtype=complex)
    b[site], b[n_sites + site] = -1j, 1j
    return a, b


def _majorana_real_basis(z: np.ndarray) -> np.ndarray:
    """Orthonormal (in ``Re <u, v>``) Majorana vectors spanning the PHS-closed
    span of the columns of ``z``; each has ``|w|^2 = 2``."""
    m = z.shape[0] // 2
    tx = tau_x(m)
    cands = np.hstack([z + tx @ z.conj(), 1j * (z - tx @ z.conj())])
    gram = np.real(cands.conj().T @ cands)
    e, v = np.linalg.eigh(gram)
    keep = e > 1e-8 * max(e.max(), 1.0)
    basis = cands @ (v[:, keep] / np.sqrt(e[keep]))
    return basis * np.sqrt(2.0)


def zero_mode_majoranas(h: np.ndarray, n_majoranas: int,
                        anchors: Sequence[int] | None = None) -> np.ndarray:
    """Majorana vectors spanning the ``n_majoranas`` lowest-``|E|`` states.

    With ``anchors`` (one site per label, in label order) each Majorana is the
    projection of the best reference Majorana on its anchor site, followed by
    a symmetric (Loewdin) orthonormalization; the sign makes the overlap with
    that reference positive. Without anchors the modes are sorted by their
    mean site index.

    Returns:
        ``2M x n_majoranas`` array of Nambu vectors, columns in label order.
    """
    m = h.shape[0] // 2
    if n_majoranas == 0:
        return np.zeros((2 * m, 0), dtype=complex)
    e, v = np.linalg.eigh(h)
    order = np.argsort(np.abs(e), kind="stable")[:n_majoranas]
    # kernel vectors v give operators v^dag Psi, so the coefficient vectors are conj(v)
    basis = _majorana_real_basis(v[:, order]).conj()
    if basis.shape[1] != n_majoranas:
        raise ValueError("zero-mode subspace is not closed under particle-hole symmetry")
    if anchors is None:
        # diagonalize the site-position operator inside the real span
        x = np.concatenate([np.arange(m)] * 2).astype(float)
        xop = np.real(basis.conj().T @ (x[:, None] * basis)) / 2
        _, xv = np.linalg.eigh(xop)
        out = basis @ xv
        for k in range(out.shape[1]):
            j = int(np.argmax(np.abs(out[:m, k])))
            ref = out[j, k] if abs(out[j, k].real) > 1e-12 else out[j, k] * -1j
            if ref.real < 0:
                out[:, k] *= -1
        return out
    if len(anchors) != n_majoranas:
        raise ValueError(f"expected {n_majoranas} anchors, got {len(anchors)}")
    projected = []
    refs = []
    for site in anchors:
        a, b = reference_majoranas(m, site)
        ref = np.stack([a, b], axis=1)
        # coefficients of the two references in the real zero-mode basis
        coef = np.real(basis.conj().T @ ref) / 2
        gm = coef.T @ coef
        w_e, w_v = np.linalg.eigh(gm)
        best = w_v[:, -1]
        # eigh leaves the sign free; orient towards the dominant reference
        lead = 0 if abs(best[0]) >= abs(best[1]) - 1e-9 else 1
        if best[lead] < 0:
            best = -best
        if w_e[-1] < 1e-6:
            raise ValueError(f"no zero-mode weight on anchor site {site}")
        projected.append(coef @ best)
        refs.append(best)
    p = np.stack(projected, axis=1)
    s = p.T @ p
    se, sv = np.linalg.eigh(s)
    if se.min() < 1e-10:
        raise ValueError("anchors do not select independent zero modes")
    p = p @ (sv @ np.diag(se ** -0.5) @ sv.T)
    out = basis @ p
    for k, site in enumerate(anchors):
        a, b = reference_majoranas(m, site)
        r = refs[k][0] * a + refs[k][1] * b
        if np.real(np.vdot(r, out[:, k])) < 0:
            out[:, k] *= -1
    return out


def majoranas_to_psi(w: np.ndarray) -> np.ndarray:
    """Pair Majorana vectors into ``psi_k`` with ``d_k = (gamma_{2k-1} + i gamma_{2k})/2``."""
    return (w[:, 0::2] + 1j * w[:, 1::2]).conj() / 2


def diagonalize(h: np.ndarray, n_zero: int = 0, anchors: Sequence[int] | None = None,
                t0: float = 0.0) -> WavefunctionSet:
    """Quasiparticle frame of ``h`` with ``E_k >= 0``.

    Args:
        h: Hermitian, particle-hole symmetric BdG matrix.
        n_zero: number of zero-mode fermions to build from the ``2 n_zero``
            lowest ``|E|`` states; they occupy the first columns, paired as
            consecutive Majorana labels.
        anchors: anchor sites for the ``2 n_zero`` Majorana labels.
    """
    m = h.shape[0] // 2
    e, v = np.linalg.eigh(h)
    order = np.argsort(np.abs(e), kind="stable")
    zero_idx = order[: 2 * n_zero]
    cols, energies = [], []
    if n_zero:
        w = zero_mode_majoranas(h, 2 * n_zero, anchors)
        psi0 = majoranas_to_psi(w)
        cols.append(psi0)
        energies.extend(np.real(np.einsum("ik,ij,jk->k", psi0.conj(), h, psi0)))
    rest = np.setdiff1d(np.arange(2 * m), zero_idx)
    pos = rest[e[rest] > 0]
    # the eigh spectrum is PHS-symmetric, so the remaining positives number M - n_zero
    pos = pos[np.argsort(e[pos], kind="stable")]
    if len(pos) != m - n_zero:
        # exact zero energies outside the requested zero modes: split them by PHS
        zs = rest[np.abs(e[rest]) <= 1e-12]
        extra = _majorana_real_basis(v[:, zs]).conj()
        pos = pos[: m - n_zero - extra.shape[1] // 2]
        cols.append(majoranas_to_psi(extra))
        energies.extend([0.0] * (extra.shape[1] // 2))
    cols.append(v[:, pos])
    energies.extend(e[pos])
    psi = np.hstack(cols)
    return WavefunctionSet(frame_from_psi(psi), np.asarray(energies, dtype=float), t0, t0, n_zero)


# ---------------------------------------------------------------------------
# propagation


def _step(h: np.ndarray, dt: float) -> np.ndarray:
    e, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * e * dt)) @ v.conj().T


def time_grid(t_from: float, t_to: float, dt: float, breakpoints: Iterable[float] = ()) -> np.ndarray:
    """Grid from ``t_from`` to ``t_to`` with spacing at most ``dt`` that contains
    every breakpoint inside the interval. Each sub-interval is split evenly."""
    pts = sorted({t_from, t_to} | {b for b in breakpoints if t_from < b < t_to})
    grid = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil((b - a) / dt - 1e-9)))
        grid.extend(a + (b - a) * np.arange(1, n + 1) / n)
    return np.asarray(grid)


@dataclass
class Propagation:
    """Result of :func:`propagate`.

    ``propagators`` maps each checkpoint time to ``S(t_c, t_from)``.
    """

    wavefunctions: WavefunctionSet
    propagator: np.ndarray
    propagators: dict[float, np.ndarray] = field(default_factory=dict)
    max_unitarity_residual: float = 0.0
    n_steps: int = 0


def propagate(ws: WavefunctionSet, network: WireNetwork, t_from: float, t_to: float,
              dt: float, checkpoints: Sequence[float] = (), tol: float = 1e-9,
              csv_path: str | None = None, n_report: int = 4) -> Propagation:
    """Integrate ``i d psi/dt = H_BdG(t) psi`` with midpoint exponential steps.

    The grid includes schedule breakpoints and checkpoints so ramps start and
    end on grid points. ``t_to < t_from`` propagates backwards in time. ``csv_path`` receives ``t``, the lowest ``n_report``
    instantaneous ``|E|`` and the unitarity residual per step.

    Raises:
        UnitarityLoss: if ``S^dag S`` drifts from identity by more than ``tol``.
    """
    bps = list(network.schedule.breakpoints()) + list(checkpoints)
    grid = time_grid(min(t_from, t_to), max(t_from, t_to), dt, bps)
    if t_to < t_from:
        # backward propagation retraces the same midpoints, giving S(t_from, t_to)^dag
        grid = grid[::-1]
    marks = {float(c) for c in checkpoints}
    dim = ws.frame.shape[0]
    s = np.eye(dim, dtype=complex)
    saved = {}
    if float(t_from) in marks:
        saved[float(t_from)] = s.copy()
    worst = 0.0
    writer = None
    fh = None
    if csv_path is not None:
        fh = open(csv_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"E{k}" for k in range(n_report)] + ["unitarity_residual"])
    try:
        for k, (a, b) in enumerate(zip(grid[:-1], grid[1:])):
            h = assemble(network, 0.5 * (a + b))
            s = _step(h, b - a) @ s
            if float(b) in marks:
                saved[float(b)] = s.copy()
            if writer is not None or k % 64 == 0 or k == len(grid) - 2:
                res = float(np.max(np.abs(s.conj().T @ s - np.eye(dim))))
                worst = max(worst, res)
                if res > tol:
                    raise UnitarityLoss(f"unitarity residual {res:.2e} at t={b:.6g}")
                if writer is not None:
                    low = np.sort(np.abs(np.linalg.eigvalsh(assemble(network, b))))[:n_report]
                    writer.writerow([repr(float(b))] + [repr(float(x)) for x in low] + [repr(res)])
    finally:
        if fh is not None:
            fh.close()
    missing = marks - saved.keys()
    if missing:
        raise ValueError(f"checkpoints {sorted(missing)} outside [{t_from}, {t_to}]")
    out = replace(ws, frame=s @ ws.frame, t=float(t_to))
    return Propagation(out, s, saved, worst, len(grid) - 1)


# ---------------------------------------------------------------------------
# Bogoliubov matrices


@dataclass(frozen=True)
class BogoliubovXY:
    """``d(a) = X d(b) + Y^* d^dag(b)`` between two frames ``a`` and ``b``."""

    X: np.ndarray
    Y: np.ndarray

    def canonicity_residual(self) -> float:
        m = self.X.shape[0]
        r1 = np.max(np.abs(self.X.conj().T @ self.X + self.Y.conj().T @ self.Y - np.eye(m)), initial=0.0)
        r2 = np.max(np.abs(self.X.T @ self.Y + self.Y.T @ self.X), initial=0.0)
        return float(max(r1, r2))

    def check(self, tol: float = 1e-7) -> None:
        res = self.canonicity_residual()
        if res > tol:
            raise CanonicityViolation(f"canonicity residual {res:.2e} exceeds {tol:g}")


def bogoliubov_xy(frame_a: WavefunctionSet | np.ndarray, frame_b: WavefunctionSet | np.ndarray) -> BogoliubovXY:
    """``X_ij = psi_i^dag(a) psi_j(b)``, ``Y_ij = psi_i^T(a) tau_x psi_j(b)``."""
    fa = frame_a.frame if isinstance(frame_a, WavefunctionSet) else frame_a
    fb = frame_b.frame if isinstance(frame_b, WavefunctionSet) else frame_b
    if fa.shape != fb.shape:
        raise ValueError("frames have different lattice dimensions")
    m = fa.shape[0] // 2
    pa, pb = fa[:, :m], fb[:, :m]
    return BogoliubovXY(pa.conj().T @ pb, pa.T @ tau_x(m) @ pb)
