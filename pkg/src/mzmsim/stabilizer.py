"""Symbolic stabilizer tracking over products of Majorana operators.

Elements of the Majorana group are stored in a canonical form: a phase
``i**power`` and a strictly ascending tuple of 1-based Majorana labels. All
objects are immutable; every operation returns a new value.

A braid ``B_ij = exp(pi/4 gamma_i gamma_j)`` acts on stabilizers through the
label substitution ``gamma_i -> -gamma_j``, ``gamma_j -> gamma_i``. For this
``B_ij`` the substitution equals ``B_ij g B_ij^dagger``, so it is the update of
the stabilizer group of ``B_ij |psi>``.

Named square-root gates follow the rotation sense of the braids:
``sqrt_P = (1 + i P)/sqrt(2)`` for a Pauli ``P``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

_PHASE_TOKENS = {0: "+1", 1: "+i", 2: "-1", 3: "-i"}
_TOKEN_POWERS = {v: k for k, v in _PHASE_TOKENS.items()}
_PHASES = (1, 1j, -1, -1j)


class ForcedOutcomeMismatch(ValueError):
    """A requested measurement outcome contradicts the stabilizer group."""


class NotInLogicalSubspace(ValueError):
    """A generator anticommutes with one of the encoding's parity constraints."""


def _phase_power(phase) -> int:
    if isinstance(phase, str):
        return _TOKEN_POWERS[phase]
    z = complex(phase)
    for k, p in enumerate(_PHASES):
        if abs(z - p) < 1e-12:
            return k
    raise ValueError(f"phase must be a fourth root of unity, got {phase!r}")


@dataclass(frozen=True, order=True)
class MajoranaMonomial:
    """``i**power * gamma_{indices[0]} gamma_{indices[1]} ...`` in normal form."""

    power: int
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "power", self.power % 4)
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, phase, indices: Iterable[int]) -> "MajoranaMonomial":
        """Build from any phase/label list, normalizing as needed."""
        return normalize(phase, list(indices))

    @property
    def phase(self) -> complex:
        return _PHASES[self.power]

    def __len__(self) -> int:
        return len(self.indices)

    def __mul__(self, other: "MajoranaMonomial") -> "MajoranaMonomial":
        return multiply(self, other)

    def __neg__(self) -> "MajoranaMonomial":
        return MajoranaMonomial(self.power + 2, self.indices)

    def scaled(self, phase) -> "MajoranaMonomial":
        return MajoranaMonomial(self.power + _phase_power(phase), self.indices)

    @property
    def is_identity(self) -> bool:
        return not self.indices and self.power == 0

    def dagger(self) -> "MajoranaMonomial":
        m = len(self.indices)
        # reversing m factors costs m(m-1)/2 transpositions
        flips = (m * (m - 1) // 2) % 2
        return MajoranaMonomial((-self.power) % 4 + 2 * flips, self.indices)

    def is_hermitian(self) -> bool:
        return self.dagger() == self

    def commutes_with(self, other: "MajoranaMonomial") -> bool:
        p, q = len(self.indices), len(other.indices)
        overlap = len(set(self.indices) & set(other.indices))
        return (p * q - overlap) % 2 == 0

    def support_mask(self, n: int) -> np.ndarray:
        v = np.zeros(n, dtype=np.uint8)
        v[[i - 1 for i in self.indices]] = 1
        return v

    def to_text(self) -> str:
        return " ".join([_PHASE_TOKENS[self.power], *map(str, self.indices)])

    @classmethod
    def from_text(cls, line: str) -> "MajoranaMonomial":
        tok, *labels = line.split()
        return normalize(tok, [int(x) for x in labels])

    def __str__(self) -> str:
        body = "".join(f"g{i}" for i in self.indices) or "1"
        return f"{_PHASE_TOKENS[self.power]}*{body}"


def normalize(raw_phase, raw_indices: Sequence[int]) -> MajoranaMonomial:
    """Bring ``raw_phase * prod(gamma_i)`` to ascending normal form.

    Each transposition of distinct labels contributes a factor -1 and each
    adjacent equal pair cancels since ``gamma_i**2 = 1``.
    """
    labels = [int(i) for i in raw_indices]
    if any(i < 1 for i in labels):
        raise ValueError("Majorana labels are positive integers")
    power = _phase_power(raw_phase)
    inversions = sum(1 for a, b in itertools.combinations(labels, 2) if a > b)
    power += 2 * (inversions % 2)
    out: list[int] = []
    for i in sorted(labels):
        if out and out[-1] == i:
            out.pop()
        else:
            out.append(i)
    return MajoranaMonomial(power, tuple(out))


def multiply(a: MajoranaMonomial, b: MajoranaMonomial) -> MajoranaMonomial:
    return normalize(_PHASES[(a.power + b.power) % 4], list(a.indices) + list(b.indices))


def parity(i: int, j: int) -> MajoranaMonomial:
    """Pair parity ``-i gamma_i gamma_j``."""
    return normalize(-1j, [i, j])


def quad_parity(i: int) -> MajoranaMonomial:
    """Sparse-qubit constraint ``-gamma_{4i-3} gamma_{4i-2} gamma_{4i-1} gamma_{4i}``."""
    a = 4 * i - 3
    return normalize(-1, [a, a + 1, a + 2, a + 3])


# ---------------------------------------------------------------------------
# stabilizer sets


@dataclass(frozen=True)
class StabilizerSet:
    generators: tuple[MajoranaMonomial, ...]
    n_majoranas: int = 0

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if not self.n_majoranas:
            top = max((max(g.indices) for g in gens if g.indices), default=0)
            object.__setattr__(self, "n_majoranas", top + top % 2)

    @classmethod
    def vacuum(cls, n_pairs: int, occupations: Sequence[int] | None = None) -> "StabilizerSet":
        """Fock state stabilized by ``(-1)**n_k (-i gamma_{2k-1} gamma_{2k})``."""
        occ = occupations if occupations is not None else [0] * n_pairs
        gens = tuple(parity(2 * k + 1, 2 * k + 2).scaled(-1 if n else 1)
                     for k, n in enumerate(occ))
        return cls(gens, 2 * n_pairs)

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def validate(self) -> None:
        gens = self.generators
        for g in gens:
            if not g.is_hermitian() or not (g * g).is_identity:
                raise ValueError(f"generator {g} is not a Hermitian involution")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes_with(b):
                raise ValueError(f"generators {a} and {b} anticommute")
        mat = np.array([g.support_mask(self.n_majoranas) for g in gens])
        if _gf2_rank(mat) < len(gens):
            raise ValueError("generators are not independent")

    def total_parity(self) -> MajoranaMonomial:
        return reduce(multiply, self.generators, MajoranaMonomial(0, ()))

    def to_text(self) -> str:
        return "\n".join(g.to_text() for g in self.generators) + "\n"

    @classmethod
    def from_text(cls, text: str, n_majoranas: int = 0) -> "StabilizerSet":
        gens = [MajoranaMonomial.from_text(l) for l in text.splitlines()
                if l.strip() and not l.lstrip().startswith("#")]
        return cls(tuple(gens), n_majoranas)

    def canonical(self) -> "StabilizerSet":
        """Sorted generator list; equality of sets, not of groups."""
        return StabilizerSet(tuple(sorted(self.generators, key=lambda g: (g.indices, g.power))),
                             self.n_majoranas)


def _gf2_rank(mat: np.ndarray) -> int:
    m = mat.copy() % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, c]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def _gf2_solve(mat: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Solve ``x @ mat = target`` over GF(2); rows of ``mat`` are generators."""
    rows, cols = mat.shape
    aug = np.concatenate([mat.T % 2, target[:, None] % 2], axis=1).astype(np.uint8)
    pivots = []
    r = 0
    for c in range(rows):
        pivot = next((i for i in range(r, cols) if aug[i, c]), None)
        if pivot is None:
            continue
        aug[[r, pivot]] = aug[[pivot, r]]
        for i in range(cols):
            if i != r and aug[i, c]:
                aug[i] ^= aug[r]
        pivots.append(c)
        r += 1
    if aug[r:, -1].any():
        return None
    x = np.zeros(rows, dtype=np.uint8)
    for i, c in enumerate(pivots):
        x[c] = aug[i, -1]
    return x


# ---------------------------------------------------------------------------
# operations


def _braid_image(k: int, i: int, j: int) -> tuple[int, int]:
    """Image of ``gamma_k`` under the braid substitution, as (sign, label)."""
    if k == i:
        return -1, j
    if k == j:
        return 1, i
    return 1, k


def conjugate_monomial(g: MajoranaMonomial, i: int, j: int) -> MajoranaMonomial:
    sign = 1
    labels = []
    for k in g.indices:
        s, l = _braid_image(k, i, j)
        sign *= s
        labels.append(l)
    return normalize(g.phase * sign, labels)


def conjugate_by_braid(s: StabilizerSet, i: int, j: int) -> StabilizerSet:
    """Rewrite every generator under ``gamma_i -> -gamma_j, gamma_j -> gamma_i``."""
    if i == j:
        raise ValueError("braid needs two distinct labels")
    n = max(s.n_majoranas, i, j)
    return StabilizerSet(tuple(conjugate_monomial(g, i, j) for g in s), n)


def apply_braid(s: StabilizerSet, i: int, j: int) -> StabilizerSet:
    """Stabilizers of ``B_ij |psi>`` given those of ``|psi>``."""
    return conjugate_by_braid(s, i, j)


def measure_parity(s: StabilizerSet, p: MajoranaMonomial, outcome: int | None = None,
                   rng: np.random.Generator | None = None) -> tuple[StabilizerSet, str, int]:
    """Projective measurement of the Hermitian even monomial ``p``.

    Returns the updated set, ``"deterministic"`` or ``"random"``, and the
    outcome. With ``outcome=None`` a random branch is drawn from ``rng``.
    """
    if len(p) % 2 or not p.is_hermitian():
        raise ValueError(f"{p} is not a Hermitian even monomial")
    gens = list(s.generators)
    anti = [k for k, g in enumerate(gens) if not g.commutes_with(p)]
    if not anti:
        forced = _forced_value(s, p)
        if outcome is not None and outcome != forced:
            raise ForcedOutcomeMismatch(f"{p} is fixed to {forced:+d} by the group")
        return s, "deterministic", forced
    if outcome is None:
        rng = rng if rng is not None else np.random.default_rng()
        outcome = 1 if rng.random() < 0.5 else -1
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    k0 = anti[0]
    for k in anti[1:]:
        gens[k] = gens[k] * gens[k0]
    gens[k0] = p if outcome == 1 else -p
    n = max(s.n_majoranas, max(p.indices))
    return StabilizerSet(tuple(gens), n), "random", outcome


def _forced_value(s: StabilizerSet, p: MajoranaMonomial) -> int:
    n = max(s.n_majoranas, max(p.indices, default=0))
    mat = np.array([g.support_mask(n) for g in s.generators])
    x = _gf2_solve(mat, p.support_mask(n))
    if x is None:
        raise ValueError(f"{p} commutes with the group but is not in it")
    prod = reduce(multiply, (g for g, bit in zip(s.generators, x) if bit), MajoranaMonomial(0, ()))
    if prod == p:
        return 1
    if prod == -p:
        return -1
    raise ValueError(f"{p} is in the group only up to a factor of i")


def in_group(s: StabilizerSet, p: MajoranaMonomial) -> bool:
    """Whether ``+p`` or ``-p`` belongs to the stabilizer group of ``s``."""
    if not all(g.commutes_with(p) for g in s.generators):
        return False
    try:
        _forced_value(s, p)
    except ValueError:
        return False
    return True


def subgroup_dimension(s: StabilizerSet, labels: Sequence[int]) -> int:
    """GF(2) dimension of the subgroup of elements supported inside ``labels``.

    An element ``prod g_k^{x_k}`` avoids the other labels exactly when ``x``
    lies in the kernel of the generator masks restricted to those labels.
    """
    n = s.n_majoranas
    mat = np.array([g.support_mask(n) for g in s.generators], dtype=np.uint8).reshape(len(s), n)
    outside = [k for k in range(n) if k + 1 not in set(labels)]
    rank = _gf2_rank(mat[:, outside]) if outside else 0
    return len(s) - rank


def factorizes(s: StabilizerSet, layout: EncodingLayout) -> bool:
    """Whether the group is a product of per-qubit groups.

    True when the per-qubit subgroups (elements living on one qubit's labels)
    together have the dimension of the whole group, i.e. the state carries no
    stabilizer that straddles two qubits.
    """
    mat = np.array([g.support_mask(s.n_majoranas) for g in s.generators], dtype=np.uint8)
    total = _gf2_rank(mat)
    return sum(subgroup_dimension(s, q) for q in layout.qubit_map) == total


# ---------------------------------------------------------------------------
# encodings and Pauli readout


@dataclass(frozen=True)
class EncodingLayout:
    """How Majorana labels host logical qubits.

    ``qubit_map`` lists, per logical qubit, the Majorana labels it owns; for
    the dense kind the final entry is the ancilla pair.
    """

    kind: str
    qubit_map: tuple[tuple[int, ...], ...]
    parity_constraints: tuple[MajoranaMonomial, ...]
    n_majoranas: int = 0

    @classmethod
    def sparse(cls, n_qubits: int) -> "EncodingLayout":
        qmap = tuple(tuple(range(4 * q - 3, 4 * q + 1)) for q in range(1, n_qubits + 1))
        cons = tuple(quad_parity(q) for q in range(1, n_qubits + 1))
        return cls("sparse", qmap, cons, 4 * n_qubits)

    @classmethod
    def dense(cls, pairs: Sequence[Sequence[int]], ancilla: Sequence[int]) -> "EncodingLayout":
        labels = sorted({*itertools.chain.from_iterable(pairs), *ancilla})
        total = normalize(1, labels)
        # Hermitian total parity with +1 on the Fock vacuum of consecutive pairs
        total = MajoranaMonomial((-(len(labels) // 2)) % 4, total.indices)
        qmap = tuple(tuple(p) for p in pairs) + (tuple(ancilla),)
        return cls("dense", qmap, (total,), max(labels))

    def check(self, s: StabilizerSet) -> None:
        for g in s:
            for c in self.parity_constraints:
                if not g.commutes_with(c):
                    raise NotInLogicalSubspace(f"{g} anticommutes with constraint {c}")

    def logical_basis(self) -> list[tuple[int, ...]]:
        """Occupation vectors over consecutive pairs spanning the code space."""
        n_pairs = self.n_majoranas // 2
        out = []
        for occ in itertools.product((0, 1), repeat=n_pairs):
            occ = occ[::-1]
            state = StabilizerSet.vacuum(n_pairs, occ)
            if all(_forced_value(state, c) == 1 for c in self.parity_constraints):
                out.append(tuple(occ))
        return sorted(out, key=_little_endian_key)


def _little_endian_key(occ: Sequence[int]) -> int:
    return sum(int(b) << k for k, b in enumerate(occ))


@dataclass(frozen=True)
class PauliString:
    """``i**power`` times a tensor product; ``ops[k]`` acts on spin ``k+1``."""

    power: int
    ops: str

    def __str__(self) -> str:
        body = "".join(f"{o}{k + 1}" for k, o in enumerate(self.ops) if o != "I") or "I"
        return f"{_PHASE_TOKENS[self.power % 4]}*{body}"

    @property
    def phase(self) -> complex:
        return _PHASES[self.power % 4]

    def __mul__(self, other: "PauliString") -> "PauliString":
        n = max(len(self.ops), len(other.ops))
        a, b = self.ops.ljust(n, "I"), other.ops.ljust(n, "I")
        power = self.power + other.power
        out = []
        for x, y in zip(a, b):
            p, o = _PAULI_TABLE[x, y]
            power += p
            out.append(o)
        return PauliString(power % 4, "".join(out))

    def matrix(self) -> np.ndarray:
        """Dense matrix; spin 1 is the least significant bit of the index."""
        mats = [_PAULI_MATS[o] for o in self.ops]
        out = np.array([[1.0 + 0j]])
        for m in mats:
            out = np.kron(m, out)
        return self.phase * out


_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _pauli_product(x: str, y: str) -> tuple[int, str]:
    m = _PAULI_MATS[x] @ _PAULI_MATS[y]
    for o, base in _PAULI_MATS.items():
        for p, ph in enumerate(_PHASES):
            if np.allclose(m, ph * base):
                return p, o
    raise AssertionError


_PAULI_TABLE = {(x, y): _pauli_product(x, y) for x in "IXYZ" for y in "IXYZ"}


def jordan_wigner(g: MajoranaMonomial, n_spins: int | None = None) -> PauliString:
    """Pauli form via ``gamma_{2i-1} = Z..Z X_i`` and ``gamma_{2i} = Z..Z Y_i``."""
    top = max(g.indices, default=0)
    n = n_spins if n_spins is not None else (top + 1) // 2
    out = PauliString(g.power, "I" * n)
    for k in g.indices:
        site = (k + 1) // 2
        ops = "Z" * (site - 1) + ("X" if k % 2 else "Y") + "I" * (n - site)
        out = out * PauliString(0, ops)
    return out


def logical_readout(s: StabilizerSet, layout: EncodingLayout) -> list[PauliString]:
    """Pauli strings of all generators after checking the code-space constraints."""
    layout.check(s)
    n = max(s.n_majoranas, layout.n_majoranas) // 2
    return [jordan_wigner(g, n) for g in s]


# ---------------------------------------------------------------------------
# logical action of braid/projection words


@dataclass(frozen=True)
class Braid:
    i: int
    j: int

    def to_text(self) -> str:
        return f"B {self.i} {self.j}"


@dataclass(frozen=True)
class Projection:
    """Projector ``(1 + outcome * monomial)/2``."""

    monomial: MajoranaMonomial
    outcome: int = 1

    def to_text(self) -> str:
        return f"P {self.outcome:+d} {self.monomial.to_text()}"


def word_to_text(word: Sequence[Braid | Projection]) -> str:
    return "\n".join(e.to_text() for e in word) + "\n"


def word_from_text(text: str) -> list[Braid | Projection]:
    out: list[Braid | Projection] = []
    for line in text.splitlines():
        tok = line.split()
        if not tok or tok[0].startswith("#"):
            continue
        if tok[0] == "B":
            out.append(Braid(int(tok[1]), int(tok[2])))
        elif tok[0] == "P":
            out.append(Projection(MajoranaMonomial.from_text(" ".join(tok[2:])), int(tok[1])))
        else:
            raise ValueError(f"unknown event line: {line!r}")
    return out


def _choi_stabilizers(n_pairs: int) -> StabilizerSet:
    """Maximally entangled state between labels 1..2n and reference 2n+1..4n."""
    off = 2 * n_pairs
    gens = []
    for k in range(n_pairs):
        a, b = 2 * k + 1, 2 * k + 2
        gens.append(parity(a, b) * parity(a + off, b + off))
        gens.append(normalize(1j, [a, a + off]))
    return StabilizerSet(tuple(gens), 2 * off)


def _stabilized_state(s: StabilizerSet, seed: int = 7) -> np.ndarray:
    n_spins = s.n_majoranas // 2
    dim = 2 ** n_spins
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    for g in s:
        m = jordan_wigner(g, n_spins).matrix()
        v = 0.5 * (v + m @ v)
    nrm = np.linalg.norm(v)
    if nrm < 1e-8:
        raise ValueError("random seed vector is orthogonal to the stabilized state")
    return v / nrm


def logical_action(word: Sequence[Braid | Projection], layout: EncodingLayout,
                   basis: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    """Matrix of the word on the logical basis, up to a global phase.

    Tracks the Choi state of the full Fock space of the layout's Majoranas with
    the symbolic update rules, then reads the matrix out of the final
    stabilized vector. Braids act as the unitaries ``B_ij``. Projections with
    forced outcomes act as ``sqrt(2)`` times the projector; the Choi vector's
    norm shrinks by ``sqrt(p)`` per projection (``p = 1/2`` for a random
    outcome, 1 for a deterministic one), which fixes the overall scale, so
    words that leak out of the logical subspace give the correct sub-unitary
    block. Raises :class:`ForcedOutcomeMismatch` if a projection annihilates
    the state.
    """
    n_pairs = layout.n_majoranas // 2
    choi0 = _choi_stabilizers(n_pairs)
    s = choi0
    norm2 = 1.0
    for ev in word:
        if isinstance(ev, Braid):
            s = apply_braid(s, ev.i, ev.j)
        else:
            s, kind, _ = measure_parity(s, ev.monomial, ev.outcome)
            norm2 *= 1.0 if kind == "random" else 2.0
    dim = 2 ** n_pairs
    v0 = _stabilized_state(choi0).reshape(dim, dim)  # [ref, sys]
    v1 = _stabilized_state(s).reshape(dim, dim)
    # index = sys + dim*ref with sys modes least significant
    full = v1.T @ np.linalg.inv(v0.T)
    basis = basis if basis is not None else layout.logical_basis()
    idx = [_little_endian_key(b) for b in basis]
    return np.sqrt(norm2) * full[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# named gates


def _sqrt(p: str, sign: int = 1) -> np.ndarray:
    return (np.eye(2) + sign * 1j * _PAULI_MATS[p]) / np.sqrt(2)


_SQ = {
    "I": np.eye(2, dtype=complex),
    "sqrt_Z": _sqrt("Z"),
    "sqrt_Z_dag": _sqrt("Z", -1),
    "sqrt_X": _sqrt("X"),
    "sqrt_X_dag": _sqrt("X", -1),
    "sqrt_Y": _sqrt("Y"),
    "sqrt_Y_dag": _sqrt("Y", -1),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "X": _PAULI_MATS["X"],
    "Y": _PAULI_MATS["Y"],
    "Z": _PAULI_MATS["Z"],
}


def _embed_single(u: np.ndarray, q: int, n: int) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(u if k == q else np.eye(2), out)
    return out


def _controlled(target_op: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        if (x >> c) & 1:
            for bit in (0, 1):
                y = (x & ~(1 << t)) | (bit << t)
                out[y, x] = target_op[bit, (x >> t) & 1]
        else:
            out[x, x] = 1
    return out


def glossary(n_qubits: int) -> dict[str, np.ndarray]:
    """Named logical gates on ``n_qubits`` (qubit 1 = least significant)."""
    gates = {}
    for q in range(n_qubits):
        for name, u in _SQ.items():
            if name == "I":
                continue
            gates[f"{name} on qubit {q + 1}"] = _embed_single(u, q, n_qubits)
    for c, t in itertools.permutations(range(n_qubits), 2):
        gates[f"CNOT control {c + 1} target {t + 1}"] = _controlled(_PAULI_MATS["X"], c, t, n_qubits)
        if c < t:
            gates[f"CZ on qubits {c + 1},{t + 1}"] = _controlled(_PAULI_MATS["Z"], c, t, n_qubits)
    gates["identity"] = np.eye(2 ** n_qubits, dtype=complex)
    return gates


def logical_qubit_matrix(t: np.ndarray, layout: EncodingLayout,
                         basis: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    """Reorder a logical-basis matrix into qubit order (qubit 1 least significant).

    Logical bit of qubit ``q`` is the occupation of its first pair.
    """
    basis = basis if basis is not None else layout.logical_basis()
    firsts = [(labels[0] + 1) // 2 - 1 for labels in layout.qubit_map[: _n_logical(layout)]]
    keys = [sum(b[p] << q for q, p in enumerate(firsts)) for b in basis]
    order = np.argsort(keys)
    if sorted(keys) != list(range(len(keys))):
        raise ValueError("basis does not map one-to-one onto logical qubit states")
    return t[np.ix_(order, order)]


def _n_logical(layout: EncodingLayout) -> int:
    return len(layout.qubit_map) - (1 if layout.kind == "dense" else 0)


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise deviation after removing the best global phase."""
    ov = np.vdot(b, a)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))


def identify_gate(word: Sequence[Braid | Projection], layout: EncodingLayout,
                  tol: float = 1e-9) -> str | None:
    """Name of the glossary gate matching the word, up to global phase."""
    u = logical_qubit_matrix(logical_action(word, layout), layout)
    n = _n_logical(layout)
    for name, g in glossary(n).items():
        if phase_distance(u, g) < tol:
            return name
    return None
