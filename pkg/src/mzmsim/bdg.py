"""Tight-binding Kitaev networks and their BdG matrices.

Nambu ordering is ``Psi = (c_1..c_M, c_1^dag..c_M^dag)`` and the many-body
Hamiltonian is ``1/2 Psi^dag H_BdG Psi`` with

    H_BdG = [[h, Dm], [Dm^dag, -h^*]]

where ``h_ii = -mu_i``, ``h_ij = -t_ij`` and the antisymmetric ``Dm`` comes
from the pairing term ``Delta_ij c_i c_j + h.c.`` (``Dm[i, j] = -conj(Delta)``,
``Dm[j, i] = conj(Delta)``). Units: hopping ``t = 1`` and ``hbar = 1``.

Time dependence enters through a :class:`ParameterSchedule` that retargets
on-site chemical potentials and per-bond multipliers with smoothstep ramps.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


class NetworkError(ValueError):
    pass


def smoothstep(x):
    """``s(x) = 3x^2 - 2x^3`` clipped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


@dataclass(frozen=True)
class Bond:
    """Nearest-neighbour link carrying hopping ``-t c_i^dag c_j`` and pairing
    ``Delta c_i c_j`` (both plus Hermitian conjugate)."""

    i: int
    j: int
    hopping: complex = 1.0
    pairing: complex = 1.0
    name: str | None = None


@dataclass(frozen=True)
class Segment:
    """Ramp from the current parameters to new targets over ``[t_start, t_end]``.

    ``mu`` maps site index to target chemical potential; ``bonds`` maps bond
    index or bond name to target multiplier. An empty segment is a hold.
    """

    t_start: float
    t_end: float
    mu: Mapping[int, float] = field(default_factory=dict)
    bonds: Mapping[int | str, float] = field(default_factory=dict)
    label: str = ""


@dataclass
class ParameterSchedule:
    segments: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        last = -np.inf
        for k, seg in enumerate(self.segments):
            if seg.t_end < seg.t_start:
                raise NetworkError(f"segment {k} ({seg.label}) ends before it starts")
            if seg.t_start < last - 1e-12:
                raise NetworkError(f"segment {k} ({seg.label}) overlaps its predecessor")
            last = seg.t_end

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end if self.segments else 0.0

    def breakpoints(self) -> list[float]:
        """Sorted segment boundaries; time grids should include all of them."""
        pts = {0.0}
        for seg in self.segments:
            pts.update((seg.t_start, seg.t_end))
        return sorted(pts)

    def extend(self, other: Sequence[Segment]) -> "ParameterSchedule":
        return ParameterSchedule(list(self.segments) + list(other))


@dataclass(frozen=True)
class DisorderSpec:
    """Uniform on-site disorder in ``[-W/2, W/2]`` added to every ``mu_i``."""

    seed: int = 0
    amplitude: float = 0.0

    def offsets(self, n_sites: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.uniform(-0.5, 0.5, n_sites) * self.amplitude


@dataclass
class WireNetwork:
    """Sites, bonds and a parameter schedule.

    Attributes:
        mu: base chemical potential per site (before the schedule acts).
        bonds: undirected links; ``bond_scale`` gives their initial multipliers.
        wires: optional named site lists, used for bookkeeping and reporting.
        junctions: sites shared by several wire ends.
    """

    mu: np.ndarray
    bonds: list[Bond]
    wires: dict[str, list[int]] = field(default_factory=dict)
    junctions: list[int] = field(default_factory=list)
    bond_scale: np.ndarray | None = None
    schedule: ParameterSchedule = field(default_factory=ParameterSchedule)
    disorder: DisorderSpec | None = None

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).copy()
        if self.bond_scale is None:
            self.bond_scale = np.ones(len(self.bonds))
        self.bond_scale = np.asarray(self.bond_scale, dtype=float).copy()
        self.validate()
        self._compiled = None

    @property
    def n_sites(self) -> int:
        return len(self.mu)

    def validate(self) -> None:
        m = self.n_sites
        seen = set()
        for k, b in enumerate(self.bonds):
            if not (0 <= b.i < m and 0 <= b.j < m):
                raise NetworkError(f"bond {k} references a site outside 0..{m - 1}")
            if b.i == b.j:
                raise NetworkError(f"bond {k} is a self-loop on site {b.i}")
            key = frozenset((b.i, b.j))
            if key in seen:
                raise NetworkError(f"duplicate bond between sites {b.i} and {b.j}")
            seen.add(key)
        if len(self.bond_scale) != len(self.bonds):
            raise NetworkError("bond_scale length does not match bonds")
        for s in self.junctions:
            if len(self.neighbours(s)) < 2:
                raise NetworkError(f"junction site {s} joins fewer than two wire ends")

    def neighbours(self, site: int) -> list[int]:
        out = []
        for b in self.bonds:
            if b.i == site:
                out.append(b.j)
            elif b.j == site:
                out.append(b.i)
        return sorted(out)

    def bond_index(self, key: int | str) -> int:
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < len(self.bonds):
                raise NetworkError(f"bond index {key} out of range")
            return int(key)
        for k, b in enumerate(self.bonds):
            if b.name == key:
                return k
        raise NetworkError(f"no bond named {key!r}")

    def with_schedule(self, schedule: ParameterSchedule) -> "WireNetwork":
        return WireNetwork(self.mu, list(self.bonds), dict(self.wires), list(self.junctions),
                           self.bond_scale, schedule, self.disorder)

    # -- schedule evaluation -------------------------------------------------

    def _compile(self):
        if self._compiled is None:
            starts, states = [], []
            mu, scale = self.mu.copy(), self.bond_scale.copy()
            for seg in self.schedule.segments:
                mu_idx = np.array(sorted(seg.mu), dtype=int)
                mu_tgt = np.array([seg.mu[k] for k in mu_idx], dtype=float)
                b_idx = np.array([self.bond_index(k) for k in seg.bonds], dtype=int)
                b_tgt = np.array(list(seg.bonds.values()), dtype=float)
                for k in mu_idx:
                    if not 0 <= k < self.n_sites:
                        raise NetworkError(f"segment {seg.label!r} retargets missing site {k}")
                starts.append(seg.t_start)
                states.append((seg, mu.copy(), scale.copy(), mu_idx, mu_tgt, b_idx, b_tgt))
                mu[mu_idx] = mu_tgt
                scale[b_idx] = b_tgt
            self._compiled = (starts, states, mu, scale)
        return self._compiled

    def parameters(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Chemical potentials and bond multipliers at time ``t`` (no disorder)."""
        starts, states, mu_final, scale_final = self._compile()
        k = bisect.bisect_right(starts, t) - 1
        if k < 0:
            return self.mu.copy(), self.bond_scale.copy()
        seg, mu0, sc0, mu_idx, mu_tgt, b_idx, b_tgt = states[k]
        if t >= seg.t_end:
            if k + 1 < len(states):
                nxt = states[k + 1]
                return nxt[1].copy(), nxt[2].copy()
            return mu_final.copy(), scale_final.copy()
        span = seg.t_end - seg.t_start
        s = float(smoothstep((t - seg.t_start) / span)) if span > 0 else 1.0
        mu, sc = mu0.copy(), sc0.copy()
        mu[mu_idx] = mu0[mu_idx] + s * (mu_tgt - mu0[mu_idx])
        sc[b_idx] = sc0[b_idx] + s * (b_tgt - sc0[b_idx])
        return mu, sc


def _bond_arrays(network: WireNetwork):
    bi = np.array([b.i for b in network.bonds], dtype=int)
    bj = np.array([b.j for b in network.bonds], dtype=int)
    hop = np.array([b.hopping for b in network.bonds], dtype=complex)
    pair = np.array([b.pairing for b in network.bonds], dtype=complex)
    return bi, bj, hop, pair


def bdg_matrix(mu: np.ndarray, bonds: Sequence[Bond], scale: np.ndarray | None = None) -> np.ndarray:
    """BdG matrix from explicit parameters (see module docstring for conventions)."""
    m = len(mu)
    h = np.diag(-np.asarray(mu, dtype=float)).astype(complex)
    dm = np.zeros((m, m), dtype=complex)
    if bonds:
        scale = np.ones(len(bonds)) if scale is None else np.asarray(scale, dtype=float)
        bi = np.array([b.i for b in bonds], dtype=int)
        bj = np.array([b.j for b in bonds], dtype=int)
        hop = np.array([b.hopping for b in bonds], dtype=complex) * scale
        pair = np.array([b.pairing for b in bonds], dtype=complex) * scale
        np.add.at(h, (bi, bj), -hop)
        np.add.at(h, (bj, bi), -hop.conj())
        np.add.at(dm, (bi, bj), -pair.conj())
        np.add.at(dm, (bj, bi), pair.conj())
    return np.block([[h, dm], [dm.conj().T, -h.conj()]])


def assemble(network: WireNetwork, t: float = 0.0) -> np.ndarray:
    """``2M x 2M`` BdG matrix of the network at time ``t``."""
    mu, scale = network.parameters(t)
    if network.disorder is not None:
        mu = mu + network.disorder.offsets(network.n_sites)
    return bdg_matrix(mu, network.bonds, scale)


def tau_x(m: int) -> np.ndarray:
    z, e = np.zeros((m, m)), np.eye(m)
    return np.block([[z, e], [e, z]])


def phs_residual(h: np.ndarray) -> float:
    m = h.shape[0] // 2
    tx = tau_x(m)
    return float(np.max(np.abs(tx @ h.conj() @ tx + h), initial=0.0))


@dataclass(frozen=True)
class SpectrumProbe:
    energies: np.ndarray  # all 2M eigenvalues, ascending
    n_zero: int           # eigenvalues with |E| < eps_zero
    bulk_gap: float
    eps_zero: float


def spectrum_probe(network_or_matrix, t: float = 0.0, min_ratio: float = 100.0,
                   eps_zero: float | None = None, rel_eps: float | None = None) -> SpectrumProbe:
    """Count near-zero BdG eigenvalues.

    The sorted ``|E|`` list is split at its largest ratio jump; when that jump
    exceeds ``min_ratio`` everything below it counts as a zero mode and the
    threshold sits at the geometric midpoint of the jump. A pair of Majorana
    zero modes shows up as two eigenvalues. An explicit ``eps_zero`` overrides
    the automatic threshold; ``rel_eps`` instead sets it to ``rel_eps`` times
    the smallest ``|E|`` above the jump.
    """
    h = network_or_matrix if isinstance(network_or_matrix, np.ndarray) else assemble(network_or_matrix, t)
    e = np.linalg.eigvalsh(h)
    mags = np.sort(np.abs(e))
    floor = max(float(mags[-1]), 1.0) * 1e-15
    logs = np.log(np.maximum(mags, floor))
    jumps = np.diff(logs)
    k = int(np.argmax(jumps)) if len(jumps) else 0
    if eps_zero is None and rel_eps is not None:
        eps_zero = rel_eps * float(mags[k + 1] if len(jumps) else mags[0])
    if eps_zero is None:
        if len(jumps) and jumps[k] > np.log(min_ratio):
            eps_zero = float(np.exp(0.5 * (logs[k] + logs[k + 1])))
        else:
            eps_zero = 0.0
    n_zero = int(np.sum(mags < eps_zero))
    above = mags[mags >= eps_zero]
    bulk = float(above[0]) if len(above) else 0.0
    return SpectrumProbe(np.sort(e), n_zero, bulk, float(eps_zero))


# ---------------------------------------------------------------------------
# builders


def chain_bonds(sites: Sequence[int], t: float = 1.0, delta: float = 1.0, phase: float = 0.0,
                prefix: str | None = None) -> list[Bond]:
    """Bonds of a Kitaev wire running along ``sites`` in the given direction."""
    pair = delta * np.exp(1j * phase)
    return [Bond(a, b, t, pair, None if prefix is None else f"{prefix}{k}")
            for k, (a, b) in enumerate(zip(sites[:-1], sites[1:]))]


def kitaev_chain(n_sites: int, mu: float = 0.0, t: float = 1.0, delta: float = 1.0,
                 phase: float = 0.0) -> WireNetwork:
    sites = list(range(n_sites))
    return WireNetwork(np.full(n_sites, mu), chain_bonds(sites, t, delta, phase),
                       wires={"wire": sites})
