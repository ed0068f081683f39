"""Tests for the symbolic Majorana stabilizer tracker."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzmsim import oracle
from mzmsim.protocol import CNOT_WORD
from mzmsim.stabilizer import (Braid, EncodingLayout, ForcedOutcomeMismatch, MajoranaMonomial,
                               NotInLogicalSubspace, Projection, StabilizerSet, apply_braid,
                               conjugate_by_braid, factorizes, glossary, identify_gate, in_group, logical_action,
                               jordan_wigner, logical_readout, measure_parity, multiply, normalize,
                               parity, quad_parity, subgroup_dimension, word_from_text, word_to_text)


def mono(phase, labels):
    return MajoranaMonomial.of(phase, labels)


def dense_of(space, m):
    return oracle.monomial_matrix(space, m).toarray()


class TestNormalize:
    @pytest.mark.parametrize("raw, expected", [
        ((1, [2, 1]), (-1, (1, 2))),
        ((1, [3, 3]), (1, ())),
        ((1, [2, 1, 2]), (-1, (1,))),
        ((1j, [4, 3, 2, 1]), (1j, (1, 2, 3, 4))),
    ])
    def test_examples(self, raw, expected):
        m = normalize(*raw)
        assert m.indices == expected[1]
        assert m.phase == expected[0]

    @given(st.lists(st.integers(1, 4), max_size=7), st.sampled_from([1, -1, 1j, -1j]))
    @settings(max_examples=80, deadline=None)
    def test_matches_matrix_product(self, labels, phase):
        # independent check: multiply the Jordan-Wigner matrices in raw order
        space = oracle.FockSpace(4)
        raw = phase * np.eye(space.dimension, dtype=complex)
        for k in labels:
            raw = raw @ oracle.gamma(space, k).toarray()
        np.testing.assert_allclose(dense_of(space, normalize(phase, labels)), raw, atol=1e-12)


class TestMultiply:
    @pytest.mark.parametrize("a, b, expected", [
        ((-1j, [1, 2]), (-1j, [1, 2]), (1, ())),
        ((-1j, [1, 2]), (-1j, [3, 4]), (-1, (1, 2, 3, 4))),
        ((1, [1, 3]), (1, [2, 3]), (-1, (1, 2))),
    ])
    def test_examples(self, a, b, expected):
        out = multiply(mono(*a), mono(*b))
        assert (out.phase, out.indices) == expected

    def test_quad_parity_is_product_of_pair_parities(self):
        assert quad_parity(1) == parity(1, 2) * parity(3, 4)

    @given(st.lists(st.integers(1, 6), max_size=5), st.lists(st.integers(1, 6), max_size=5),
           st.lists(st.integers(1, 6), max_size=5))
    @settings(max_examples=60, deadline=None)
    def test_associative(self, a, b, c):
        x, y, z = normalize(1, a), normalize(1j, b), normalize(-1, c)
        assert (x * y) * z == x * (y * z)

    @pytest.mark.parametrize("i, j", [(1, 2), (3, 7), (2, 8)])
    def test_hermitian_parity_squares_to_identity(self, i, j):
        p = parity(i, j)
        assert p.is_hermitian()
        assert (p * p).is_identity


class TestBraidConjugation:
    def test_entangling_braid_example(self):
        s = conjugate_by_braid(StabilizerSet.vacuum(2), 2, 3)
        assert s.canonical() == StabilizerSet((mono(1j, [1, 3]), mono(-1j, [2, 4])), 4).canonical()

    def test_same_pair_leaves_parity_invariant(self):
        s = StabilizerSet((parity(1, 2),), 2)
        assert conjugate_by_braid(s, 1, 2).generators == (parity(1, 2),)

    def test_disjoint_support(self):
        s = StabilizerSet((parity(5, 6),), 6)
        assert conjugate_by_braid(s, 2, 3).generators == (parity(5, 6),)

    @pytest.mark.parametrize("i, j", [(1, 2), (2, 3), (4, 1), (3, 6)])
    def test_matches_oracle_conjugation(self, i, j):
        # B g B^dag for every single Majorana, using the oracle braid unitary
        space = oracle.FockSpace(6)
        b = oracle.braid(space, i, j).toarray()
        for k in range(1, 7):
            g = mono(1, [k])
            lhs = b @ dense_of(space, g) @ b.conj().T
            s = conjugate_by_braid(StabilizerSet((g,), 6), i, j)
            np.testing.assert_allclose(dense_of(space, s.generators[0]), lhs, atol=1e-12)

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 3))
    @settings(max_examples=60, deadline=None)
    def test_total_parity_conserved(self, i, j, seed):
        if i == j:
            return
        s = StabilizerSet.vacuum(3)
        rng = np.random.default_rng(seed)
        for a, b in rng.integers(1, 7, size=(4, 2)):
            if a != b:
                s = apply_braid(s, int(a), int(b))
        before = s.total_parity()
        assert apply_braid(s, i, j).total_parity() == before

    def test_double_braid_flips_signs(self):
        s = StabilizerSet.vacuum(2)
        twice = conjugate_by_braid(conjugate_by_braid(s, 2, 3), 2, 3)
        assert twice.canonical() == StabilizerSet((-parity(1, 2), -parity(3, 4)), 4).canonical()

    @pytest.mark.parametrize("i, j", [(1, 3), (2, 5), (1, 6)])
    def test_far_braids_commute(self, i, j):
        s = conjugate_by_braid(StabilizerSet.vacuum(3), 2, 3)
        a = conjugate_by_braid(conjugate_by_braid(s, i, i + 1), j, j + 1) if abs(i - j) > 1 else None
        if a is None:
            pytest.skip("adjacent generators")
        b = conjugate_by_braid(conjugate_by_braid(s, j, j + 1), i, i + 1)
        assert a.canonical() == b.canonical()

    @pytest.mark.parametrize("i", [1, 2, 3, 4])
    def test_yang_baxter(self, i):
        s = conjugate_by_braid(StabilizerSet.vacuum(3), 1, 4)
        j = i + 1
        a = s
        for k in (i, j, i):
            a = conjugate_by_braid(a, k, k + 1)
        b = s
        for k in (j, i, j):
            b = conjugate_by_braid(b, k, k + 1)
        assert a.canonical() == b.canonical()


class TestMeasureParity:
    def test_sparse_to_dense(self):
        s0 = StabilizerSet.vacuum(4)
        s1, kind, out = measure_parity(s0, parity(4, 5), 1)
        assert kind == "random" and out == 1
        assert parity(4, 5) in s1.generators
        s1.validate()

    def test_deterministic_when_stabilized(self):
        s0 = StabilizerSet.vacuum(2)
        s1, kind, out = measure_parity(s0, parity(1, 2), 1)
        assert kind == "deterministic" and out == 1
        assert s1 == s0

    def test_forced_mismatch(self):
        with pytest.raises(ForcedOutcomeMismatch):
            measure_parity(StabilizerSet.vacuum(2), parity(1, 2), -1)

    def test_cnot_word_restores_sparse_encoding(self):
        s, _, _ = measure_parity(StabilizerSet.vacuum(4), parity(4, 5), 1)
        for i, j in CNOT_WORD:
            s = apply_braid(s, i, j)
        s, _, out = measure_parity(s, quad_parity(1), 1)
        assert out == 1
        layout = EncodingLayout.sparse(2)
        assert all(in_group(s, c) for c in layout.parity_constraints)
        layout.check(s)

    def test_seeded_random_outcome_is_reproducible(self):
        s0 = StabilizerSet.vacuum(4)
        a = [measure_parity(s0, parity(4, 5), rng=np.random.default_rng(5))[2] for _ in range(3)]
        assert len(set(a)) == 1

    @given(st.integers(0, 200))
    @settings(max_examples=40, deadline=None)
    def test_commuting_measurement_keeps_group(self, seed):
        rng = np.random.default_rng(seed)
        s = StabilizerSet.vacuum(3)
        for a, b in rng.integers(1, 7, size=(5, 2)):
            if a != b:
                s = apply_braid(s, int(a), int(b))
        g = s.generators[int(rng.integers(len(s)))]
        s2, kind, _ = measure_parity(s, g if g.is_hermitian() else -g)
        assert kind == "deterministic" and s2 == s


class TestReadout:
    def test_initial_frame_is_z(self):
        layout = EncodingLayout.dense([(1, 2), (3, 4)], (5, 6))
        frame = [str(p) for p in logical_readout(StabilizerSet.vacuum(3), layout)]
        assert frame == ["+1*Z1", "+1*Z2", "+1*Z3"]

    def test_braid_23_frame(self):
        layout = EncodingLayout.dense([(1, 2)], (3, 4))
        frame = [str(p) for p in logical_readout(apply_braid(StabilizerSet.vacuum(2), 2, 3), layout)]
        assert "+1*Y1X2" in frame

    def test_double_braid_34_restores_z_frame(self):
        layout = EncodingLayout.dense([(1, 2)], (3, 4))
        s = apply_braid(apply_braid(StabilizerSet.vacuum(2), 3, 4), 3, 4)
        assert [str(p) for p in logical_readout(s, layout)] == ["+1*Z1", "+1*Z2"]

    def test_not_in_logical_subspace(self):
        layout = EncodingLayout.sparse(2)
        s = apply_braid(StabilizerSet.vacuum(4), 4, 5)
        with pytest.raises(NotInLogicalSubspace):
            logical_readout(s, layout)

    @pytest.mark.parametrize("labels", [(1,), (1, 2), (2, 3, 5), (1, 4, 6, 7)])
    def test_jordan_wigner_matches_oracle(self, labels):
        space = oracle.FockSpace(8)
        m = mono(1, labels)
        np.testing.assert_allclose(jordan_wigner(m, 4).matrix(), dense_of(space, m), atol=1e-12)


class TestGateIdentification:
    @pytest.mark.parametrize("word, name", [
        ([Braid(2, 3)], "sqrt_X on qubit 1"),
        ([Braid(3, 2)], "sqrt_X_dag on qubit 1"),
        ([Braid(1, 2)], "sqrt_Z on qubit 1"),
        ([Braid(1, 2), Braid(1, 2)], "Z on qubit 1"),
        ([], "identity"),
    ])
    def test_single_qubit(self, word, name):
        assert identify_gate(word, EncodingLayout.sparse(1)) == name

    def test_cnot_word(self):
        word = [Projection(parity(4, 5), 1)] + [Braid(i, j) for i, j in CNOT_WORD] + [Projection(quad_parity(1), 1)]
        assert identify_gate(word, EncodingLayout.sparse(2)) == "CNOT control 1 target 2"

    def test_leaking_word_keeps_exact_scale(self):
        # B_36 moves half of each logical state out of the sparse subspace
        t = logical_action([Braid(3, 6)], EncodingLayout.sparse(2))
        np.testing.assert_allclose(np.linalg.norm(t, axis=0), np.sqrt(0.5), atol=1e-14)
        assert identify_gate([Braid(3, 6)], EncodingLayout.sparse(2)) is None

    def test_deterministic_projection_scales_by_sqrt2(self):
        t = logical_action([Projection(quad_parity(1), 1)], EncodingLayout.sparse(1))
        np.testing.assert_allclose(t, np.sqrt(2) * np.eye(2) * (t[0, 0] / abs(t[0, 0])), atol=1e-14)

    def test_glossary_entries_are_unitary(self):
        for name, u in glossary(2).items():
            np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12, err_msg=name)


class TestFactorization:
    def test_product_state(self):
        s = apply_braid(StabilizerSet.vacuum(4), 2, 3)
        assert factorizes(s, EncodingLayout.sparse(2))

    def test_bell_state_inside_logical_subspace(self):
        # |+0> then CNOT through the dense encoding gives a Bell pair
        s = apply_braid(apply_braid(StabilizerSet.vacuum(4), 1, 2), 2, 3)
        s, _, _ = measure_parity(s, parity(4, 5), 1)
        for i, j in CNOT_WORD:
            s = apply_braid(s, i, j)
        s, _, _ = measure_parity(s, quad_parity(1), 1)
        layout = EncodingLayout.sparse(2)
        assert all(in_group(s, c) for c in layout.parity_constraints)
        assert not factorizes(s, layout)

    def test_subgroup_dimension(self):
        s = StabilizerSet.vacuum(4)
        assert subgroup_dimension(s, (1, 2, 3, 4)) == 2
        assert subgroup_dimension(s, (1, 2)) == 1
        assert subgroup_dimension(s, range(1, 9)) == 4

    @given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)), max_size=12))
    @settings(max_examples=60, deadline=None)
    def test_intra_qubit_words_never_entangle(self, pairs):
        s = StabilizerSet.vacuum(4)
        for a, b in pairs:
            if a != b:
                s = apply_braid(s, a, b)
                s = apply_braid(s, a + 4, b + 4)
        assert factorizes(s, EncodingLayout.sparse(2))


class TestText:
    def test_stabilizer_round_trip(self):
        s = apply_braid(StabilizerSet.vacuum(3), 2, 5)
        assert StabilizerSet.from_text(s.to_text(), 6) == s

    def test_word_round_trip(self):
        word = [Braid(2, 3), Projection(parity(4, 5), -1), Braid(8, 7)]
        assert word_from_text(word_to_text(word)) == word

    @pytest.mark.parametrize("bad", ["X 1 2", "B 1"])
    def test_bad_lines(self, bad):
        with pytest.raises((ValueError, IndexError)):
            word_from_text(bad)


@pytest.mark.parametrize("n_pairs", [1, 2, 3])
def test_vacuum_set_is_valid(n_pairs):
    s = StabilizerSet.vacuum(n_pairs)
    s.validate()
    assert len(s) == n_pairs
    for a, b in itertools.combinations(s.generators, 2):
        assert a.commutes_with(b)
