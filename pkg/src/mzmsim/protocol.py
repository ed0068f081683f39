"""Schedules of braids, dwells and parity projections, and their transition matrices.

Four backends evaluate a schedule:

``stabilizer``
    symbolic Clifford tracking (braids and Clifford dwells only).
``ideal``
    exact matrices on the Fock space of the logical Majoranas.
``pfaffian``
    BdG time evolution of a physical device with the Pfaffian overlap formula.
``exact``
    brute-force many-body evolution of the same device (12 sites at most).

Projectors enter scaled by ``sqrt(2)``: a pair projection is ``sqrt(2) d d^dag``
(even) with ``d = (gamma_a + i gamma_b)/2`` and a quad projection is
``sqrt(2) (1 -/+ gamma_a gamma_b gamma_c gamma_d)/2``. Time ordering puts later
events to the left.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import oracle
from .stabilizer import (Braid, EncodingLayout, MajoranaMonomial, Projection, identify_gate,
                         logical_action, logical_qubit_matrix, parity, quad_parity)

SQRT2 = math.sqrt(2.0)


class ScheduleError(ValueError):
    pass


class BasisOutsideZeroSector(ValueError):
    pass


class ZeroProbabilityOutcome(ValueError):
    pass


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class BraidMove:
    """Exchange of Majoranas ``i`` and ``j`` acting as ``B_ij = exp(pi/4 gamma_i gamma_j)``."""

    i: int
    j: int
    path: str | None = None


@dataclass(frozen=True)
class Dwell:
    """Hybridization dwell acting as ``exp(angle gamma_i gamma_j)``."""

    i: int
    j: int
    angle: float


@dataclass(frozen=True)
class ProjectPair:
    """Joint-parity projection of sparse qubits ``i`` and ``j`` on labels ``(4i, 4j-3)``."""

    qubit_i: int
    qubit_j: int
    outcome: str = "even"


@dataclass(frozen=True)
class ProjectQuad:
    """Total-parity projection of sparse qubit ``qubit`` on labels ``4q-3..4q``."""

    qubit: int
    outcome: str = "even"


@dataclass(frozen=True)
class Readout:
    basis: tuple[tuple[int, ...], ...] | None = None


Event = BraidMove | Dwell | ProjectPair | ProjectQuad | Readout
_OUTCOMES = ("even", "odd", "sampled")


def generalized_projectors(i: int, j: int) -> tuple[MajoranaMonomial, MajoranaMonomial]:
    """Pair parity on ``(4i, 4j-3)`` and quad parity of qubit ``i``.

    The even projectors are ``(1 + p)/2`` for the returned Hermitian monomials.
    """
    if i == j:
        raise ScheduleError("a qubit cannot be paired with itself")
    if i < 1 or j < 1:
        raise ScheduleError("qubit indices start at 1")
    return parity(4 * i, 4 * j - 3), quad_parity(i)


def _projection_monomial(ev: ProjectPair | ProjectQuad) -> MajoranaMonomial:
    if isinstance(ev, ProjectPair):
        return generalized_projectors(ev.qubit_i, ev.qubit_j)[0]
    return quad_parity(ev.qubit)


@dataclass
class Schedule:
    """Ordered events on a sparse layout plus integration settings.

    Attributes:
        events: braids, dwells, projections and an optional final readout.
        layout: encoding the labels refer to.
        dt: integrator step for physical backends.
        basis: occupation vectors of the zero-mode pairs; defaults to the
            layout's logical basis.
    """

    events: list
    layout: EncodingLayout
    dt: float = 0.1
    basis: list[tuple[int, ...]] | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        n = self.layout.n_majoranas
        n_q = len(self.layout.qubit_map)
        open_pairs: list[set[int]] = []
        for k, ev in enumerate(self.events):
            where = f"event {k} ({type(ev).__name__})"
            if isinstance(ev, (BraidMove, Dwell)):
                for lab in (ev.i, ev.j):
                    if not 1 <= lab <= n:
                        raise ScheduleError(f"{where}: label {lab} outside 1..{n}")
                if ev.i == ev.j:
                    raise ScheduleError(f"{where}: needs two distinct labels")
            elif isinstance(ev, ProjectPair):
                for q in (ev.qubit_i, ev.qubit_j):
                    if not 1 <= q <= n_q:
                        raise ScheduleError(f"{where}: qubit {q} does not exist")
                if ev.qubit_i == ev.qubit_j:
                    raise ScheduleError(f"{where}: a qubit cannot be paired with itself")
                if ev.outcome not in _OUTCOMES:
                    raise ScheduleError(f"{where}: unknown outcome policy {ev.outcome!r}")
                open_pairs.append({ev.qubit_i, ev.qubit_j})
            elif isinstance(ev, ProjectQuad):
                if not 1 <= ev.qubit <= n_q:
                    raise ScheduleError(f"{where}: qubit {ev.qubit} does not exist")
                if ev.outcome not in _OUTCOMES:
                    raise ScheduleError(f"{where}: unknown outcome policy {ev.outcome!r}")
                match = [p for p in open_pairs if ev.qubit in p]
                if not match:
                    raise ScheduleError(f"{where}: quad projection on qubit {ev.qubit} "
                                        "has no preceding pair projection to close")
                open_pairs.remove(match[-1])
            elif isinstance(ev, Readout):
                if k != len(self.events) - 1:
                    raise ScheduleError(f"{where}: readout must be the last event")
            else:
                raise ScheduleError(f"{where}: unknown event type")
        if self.layout.kind != "sparse":
            raise ScheduleError("schedules are written against a sparse layout")

    @property
    def projections(self) -> list[ProjectPair | ProjectQuad]:
        return [e for e in self.events if isinstance(e, (ProjectPair, ProjectQuad))]

    def resolved_basis(self) -> list[tuple[int, ...]]:
        for ev in self.events:
            if isinstance(ev, Readout) and ev.basis is not None:
                return [tuple(b) for b in ev.basis]
        if self.basis is not None:
            return [tuple(b) for b in self.basis]
        return self.layout.logical_basis()

    def with_outcomes(self, outcomes: Sequence[int]) -> "Schedule":
        """Copy with each projection's policy replaced by a concrete outcome
        (``+1`` even, ``-1`` odd)."""
        it = iter(outcomes)
        evs = []
        for ev in self.events:
            if isinstance(ev, ProjectPair):
                evs.append(ProjectPair(ev.qubit_i, ev.qubit_j, "even" if next(it) > 0 else "odd"))
            elif isinstance(ev, ProjectQuad):
                evs.append(ProjectQuad(ev.qubit, "even" if next(it) > 0 else "odd"))
            else:
                evs.append(ev)
        return Schedule(evs, self.layout, self.dt, self.basis)


def _outcome_sign(policy: str) -> int:
    if policy == "sampled":
        raise ScheduleError("sampled outcomes must be drawn with sample_outcomes first")
    return 1 if policy == "even" else -1


def logical_word(schedule: Schedule) -> list[Braid | Projection]:
    """Tracker word of a schedule; dwells must have Clifford angles (multiples of pi/4)."""
    word: list[Braid | Projection] = []
    for ev in schedule.events:
        if isinstance(ev, BraidMove):
            word.append(Braid(ev.i, ev.j))
        elif isinstance(ev, Dwell):
            q = ev.angle / (np.pi / 4)
            n = int(round(q))
            if abs(q - n) > 1e-12:
                raise ScheduleError(f"dwell angle {ev.angle} is not a multiple of pi/4")
            b = Braid(ev.i, ev.j) if n >= 0 else Braid(ev.j, ev.i)
            word.extend([b] * abs(n))
        elif isinstance(ev, (ProjectPair, ProjectQuad)):
            word.append(Projection(_projection_monomial(ev), _outcome_sign(ev.outcome)))
    return word


# ---------------------------------------------------------------------------
# ideal backend


def _ideal_operators(schedule: Schedule, space: oracle.FockSpace):
    ops = []
    for ev in schedule.events:
        if isinstance(ev, BraidMove):
            ops.append(("U", oracle.braid(space, ev.i, ev.j)))
        elif isinstance(ev, Dwell):
            ops.append(("U", oracle.rotation(space, ev.i, ev.j, ev.angle)))
        elif isinstance(ev, (ProjectPair, ProjectQuad)):
            ops.append(("P", ev, _projection_monomial(ev)))
    return ops


def ideal_transition_matrix(schedule: Schedule, basis: Sequence[Sequence[int]] | None = None) -> np.ndarray:
    """``<m| W |n>`` with ``W`` the product of exact braid/rotation matrices and
    ``sqrt(2)``-scaled projectors."""
    space = oracle.FockSpace(schedule.layout.n_majoranas)
    vec = np.eye(space.dimension, dtype=complex)
    for op in _ideal_operators(schedule, space):
        if op[0] == "U":
            vec = op[1] @ vec
        else:
            vec = SQRT2 * (oracle.projector(space, op[2], _outcome_sign(op[1].outcome)) @ vec)
    basis = basis if basis is not None else schedule.resolved_basis()
    idx = [space.index(b) for b in basis]
    return vec[np.ix_(idx, idx)]


@dataclass
class SampledOutcomes:
    outcomes: list[int]
    probabilities: list[float]
    schedule: Schedule


def sample_outcomes(schedule: Schedule, seed: int | None = None,
                    initial: np.ndarray | Sequence[int] | None = None) -> SampledOutcomes:
    """Born-rule outcomes of the projections on the ideal backend.

    Forced policies keep their outcome and report its probability; ``sampled``
    events draw from a seeded generator. ``initial`` is an occupation vector or
    a Fock-space vector (default: first basis state).

    Raises:
        ZeroProbabilityOutcome: if a forced outcome has vanishing probability.
    """
    rng = np.random.default_rng(seed)
    space = oracle.FockSpace(schedule.layout.n_majoranas)
    if initial is None:
        psi = space.basis_state(schedule.resolved_basis()[0])
    elif np.ndim(initial) == 1 and len(initial) == space.dimension and len(initial) != space.n_modes:
        psi = np.asarray(initial, dtype=complex)
    else:
        psi = space.basis_state(initial)
    psi = psi / np.linalg.norm(psi)
    outcomes, probs = [], []
    for op in _ideal_operators(schedule, space):
        if op[0] == "U":
            psi = op[1] @ psi
            continue
        ev, mono = op[1], op[2]
        p_even = float(np.linalg.norm(oracle.projector(space, mono, 1) @ psi) ** 2)
        p_even = min(max(p_even, 0.0), 1.0)
        if ev.outcome == "sampled":
            sign = 1 if rng.random() < p_even else -1
        else:
            sign = _outcome_sign(ev.outcome)
        p = p_even if sign > 0 else 1.0 - p_even
        if p < 1e-14:
            raise ZeroProbabilityOutcome(f"{type(ev).__name__} outcome {sign:+d} has probability {p:.2e}")
        psi = oracle.projector(space, mono, sign) @ psi / math.sqrt(p)
        outcomes.append(sign)
        probs.append(p)
    return SampledOutcomes(outcomes, probs, schedule.with_outcomes(outcomes))


# ---------------------------------------------------------------------------
# fidelity and comparison helpers


def gate_fidelity(t: np.ndarray, target: np.ndarray) -> float:
    """``|tr(target^dag T)|^2 / (d tr(T^dag T))`` clamped to [0, 1]."""
    t = np.asarray(t)
    target = np.asarray(target)
    if t.shape != target.shape:
        raise ValueError(f"shape mismatch {t.shape} vs {target.shape}")
    d = t.shape[0]
    den = d * np.real(np.trace(t.conj().T @ t))
    if den <= 0:
        return 0.0
    f = abs(np.trace(target.conj().T @ t)) ** 2 / den
    return float(min(max(f, 0.0), 1.0))


def align_phase(a: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """``a`` times the global phase that best matches ``reference``."""
    ov = np.vdot(a, reference)
    return a * (ov / abs(ov)) if abs(ov) > 0 else a


def aligned_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Max entrywise ``|a - e^{i phi} b|`` with the least-squares phase."""
    return float(np.max(np.abs(a - align_phase(b, a)), initial=0.0))


# ---------------------------------------------------------------------------
# results


@dataclass
class TransitionMatrix:
    """``T_mn`` on a list of occupation vectors plus run diagnostics."""

    basis: list[tuple[int, ...]]
    T: np.ndarray
    backend: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def qubit_matrix(self, layout: EncodingLayout) -> np.ndarray:
        return logical_qubit_matrix(self.T, layout, self.basis)

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.T, axis=0)

    def to_dict(self, target_name: str | None = None, target: np.ndarray | None = None,
                layout: EncodingLayout | None = None) -> dict:
        out = {
            "backend": self.backend,
            "basis": ["".join(str(b) for b in occ) for occ in self.basis],
            "T_real": [[float(x) for x in row] for row in self.T.real],
            "T_imag": [[float(x) for x in row] for row in self.T.imag],
        }
        if target is not None and layout is not None:
            out["target"] = target_name
            out["fidelity"] = gate_fidelity(self.qubit_matrix(layout), target)
        out["diagnostics"] = self.diagnostics
        return out


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps_result(obj: dict) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _fmt(obj) + "\n"


def transition_from_dict(d: dict) -> TransitionMatrix:
    basis = [tuple(int(c) for c in s) for s in d["basis"]]
    t = np.asarray(d["T_real"], dtype=float) + 1j * np.asarray(d["T_imag"], dtype=float)
    return TransitionMatrix(basis, t, d.get("backend", "?"), d.get("diagnostics", {}))


# ---------------------------------------------------------------------------
# run


def run(schedule: Schedule, device=None, backend: str = "pfaffian",
        basis: Sequence[Sequence[int]] | None = None, workers: int = 1,
        seed: int | None = None, csv_path: str | None = None) -> TransitionMatrix:
    """Transition matrix of a schedule on the chosen backend.

    Sampled projection policies are resolved first with :func:`sample_outcomes`.
    Physical backends need a ``device`` (see :mod:`mzmsim.devices`).
    """
    t_start = time.perf_counter()
    probs = None
    if any(getattr(e, "outcome", None) == "sampled" for e in schedule.events):
        draw = sample_outcomes(schedule, seed)
        schedule, probs = draw.schedule, draw.probabilities
    basis = [tuple(b) for b in (basis if basis is not None else schedule.resolved_basis())]
    diag: dict[str, Any] = {"n_projections": len(schedule.projections)}
    if backend == "stabilizer":
        t = logical_action(logical_word(schedule), schedule.layout, basis)
        diag["gate"] = identify_gate(logical_word(schedule), schedule.layout)
    elif backend == "ideal":
        t = ideal_transition_matrix(schedule, basis)
    elif backend in ("pfaffian", "exact"):
        if device is None:
            raise ScheduleError(f"backend {backend!r} needs a device")
        from .devices import run_physical

        t, extra = run_physical(schedule, device, backend, basis, workers=workers, csv_path=csv_path)
        diag.update(extra)
    else:
        raise ScheduleError(f"unknown backend {backend!r}")
    if probs is not None:
        diag["sampled_probabilities"] = probs
    diag["runtime_s"] = time.perf_counter() - t_start
    return TransitionMatrix(basis, np.asarray(t), backend, diag)


def event_probabilities(schedule: Schedule, basis: Sequence[Sequence[int]] | None = None) -> list[list[float]]:
    """Ideal-backend probability of each projection's outcome, per basis input."""
    basis = basis if basis is not None else schedule.resolved_basis()
    out = []
    for occ in basis:
        try:
            out.append(sample_outcomes(schedule, 0, occ).probabilities)
        except ZeroProbabilityOutcome:
            out.append([0.0] * len(schedule.projections))
    return [list(col) for col in zip(*out)] if out and out[0] else []


def branch_rows_template(schedule: Schedule) -> list[list[tuple[str, Any]]]:
    """Per projection event, its expansion terms as ``(kind, data)`` pairs; used
    by the physical backends and by the branch-count telemetry."""
    terms = []
    for ev in schedule.projections:
        sign = _outcome_sign(ev.outcome)
        if isinstance(ev, ProjectPair):
            terms.append([("pair", (4 * ev.qubit_i, 4 * ev.qubit_j - 3, sign))])
        else:
            q = ev.qubit
            terms.append([("one", SQRT2 / 2),
                          ("quad", (tuple(range(4 * q - 3, 4 * q + 1)), -sign * SQRT2 / 2))])
    return terms


def n_branches(schedule: Schedule) -> int:
    return int(np.prod([len(t) for t in branch_rows_template(schedule)], dtype=int)) if schedule.projections else 1


#: braid word (time order) between the encoding swaps that gives CZ on two sparse qubits
CZ_WORD = ((3, 6), (2, 1), (8, 7))
#: Hadamard-conjugated CZ, giving CNOT with control 1 and target 2
CNOT_WORD = ((6, 7), (8, 7), (6, 7), (3, 6), (1, 2), (8, 7), (6, 7), (8, 7), (6, 7))


def encoding_swap_schedule(word: Sequence[tuple[int, int]] = CNOT_WORD, dt: float = 0.05,
                           outcome: str = "even") -> Schedule:
    """Two sparse qubits: pair projection into the dense encoding, the braid
    ``word``, then the quadruple projection back to the sparse encoding."""
    events = [ProjectPair(1, 2, outcome)]
    events += [BraidMove(i, j) for i, j in word]
    events.append(ProjectQuad(1, outcome))
    return Schedule(events, EncodingLayout.sparse(2), dt=dt)


__all__ = [
    "BraidMove", "Dwell", "ProjectPair", "ProjectQuad", "Readout", "Schedule", "ScheduleError",
    "BasisOutsideZeroSector", "ZeroProbabilityOutcome", "generalized_projectors", "logical_word",
    "ideal_transition_matrix", "sample_outcomes", "gate_fidelity", "aligned_deviation",
    "align_phase", "TransitionMatrix", "dumps_result", "transition_from_dict", "run",
    "event_probabilities", "n_branches", "SampledOutcomes", "CZ_WORD", "CNOT_WORD",
    "encoding_swap_schedule",
]

