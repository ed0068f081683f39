"""Wire networks, schedules and BdG assembly."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mzmsim import oracle
from mzmsim.bdg import (Bond, DisorderSpec, NetworkError, ParameterSchedule, Segment, WireNetwork, assemble,
                        bdg_matrix, chain_bonds, kitaev_chain, phs_residual, smoothstep, spectrum_probe)
from mzmsim.devices import CouplerArrayDevice, TJunctionDevice


def direct_hamiltonian(space, mu, bonds):
    """Second-quantized Kitaev Hamiltonian built from fermion operators."""
    c = [((oracle.gamma(space, 2 * k + 1) + 1j * oracle.gamma(space, 2 * k + 2)) / 2).toarray()
         for k in range(space.n_modes)]
    cd = [x.conj().T for x in c]
    h = sum(-mu[k] * cd[k] @ c[k] for k in range(len(mu)))
    for b in bonds:
        hop = -b.hopping * cd[b.i] @ c[b.j]
        pair = b.pairing * c[b.i] @ c[b.j]
        h = h + hop + hop.conj().T + pair + pair.conj().T
    return h


class TestAssemble:
    def test_two_site_sweet_spot(self):
        e = np.linalg.eigvalsh(assemble(kitaev_chain(2)))
        # the nonzero pair sits at +-2t with these conventions
        np.testing.assert_allclose(e, [-2, 0, 0, 2], atol=1e-14)

    @pytest.mark.parametrize("mu, t, delta, phase", [(0.3, 1.0, 0.7, 0.0), (-0.5, 0.8, 1.2, 0.9),
                                                     (1.1, 1.0, 1.0, np.pi / 2)])
    def test_matches_second_quantized_oracle(self, mu, t, delta, phase):
        net = kitaev_chain(3, mu, t, delta, phase)
        space = oracle.FockSpace(6)
        lifted = oracle.lift_bdg(space, assemble(net)).toarray()
        direct = direct_hamiltonian(space, net.mu, net.bonds)
        diff = lifted - direct
        # equal up to a constant energy shift
        np.testing.assert_allclose(diff, diff[0, 0] * np.eye(space.dimension), atol=1e-12)

    @given(st.floats(-3, 3), st.floats(0.1, 2), st.floats(0.1, 2), st.floats(0, 2 * np.pi), st.integers(2, 8))
    @settings(max_examples=50, deadline=None)
    def test_hermitian_and_phs(self, mu, t, delta, phase, n):
        h = assemble(kitaev_chain(n, mu, t, delta, phase))
        assert h.shape == (2 * n, 2 * n)
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)
        assert phs_residual(h) < 1e-12

    def test_trivial_limit_has_no_subgap_modes(self):
        e = np.abs(np.linalg.eigvalsh(assemble(kitaev_chain(6, mu=50.0))))
        assert e.min() > 40

    def test_linear_in_parameters(self):
        bonds = chain_bonds([0, 1, 2], 1.0, 0.6)
        mu1, mu2 = np.array([0.1, -0.2, 0.4]), np.array([1.0, 0.5, -0.3])
        s1, s2 = np.array([0.5, 1.0]), np.array([0.2, -0.7])
        zero = bdg_matrix(np.zeros(3), bonds, np.zeros(2))
        lhs = bdg_matrix(mu1 + mu2, bonds, s1 + s2)
        rhs = bdg_matrix(mu1, bonds, s1) + bdg_matrix(mu2, bonds, s2) - zero
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)

    def test_zero_disorder_is_bitwise_clean(self):
        clean = kitaev_chain(5, 0.2)
        dirty = WireNetwork(clean.mu, clean.bonds, disorder=DisorderSpec(seed=4, amplitude=0.0))
        assert np.array_equal(assemble(clean), assemble(dirty))

    def test_disorder_reproducible(self):
        a = DisorderSpec(seed=9, amplitude=0.5).offsets(20)
        b = DisorderSpec(seed=9, amplitude=0.5).offsets(20)
        assert np.array_equal(a, b)
        assert np.all(np.abs(a) <= 0.25)


class TestNetworkValidation:
    @pytest.mark.parametrize("bonds, match", [
        ([Bond(0, 3)], "outside"),
        ([Bond(1, 1)], "self-loop"),
        ([Bond(0, 1), Bond(1, 0)], "duplicate"),
    ])
    def test_bad_bonds(self, bonds, match):
        with pytest.raises(NetworkError, match=match):
            WireNetwork(np.zeros(3), bonds)

    def test_junction_needs_two_ends(self):
        with pytest.raises(NetworkError, match="junction"):
            WireNetwork(np.zeros(3), [Bond(0, 1)], junctions=[2])

    def test_adjacency_symmetric(self):
        net = TJunctionDevice(arm=4, leg=3, segment=2).base_network()
        for s in range(net.n_sites):
            for nb in net.neighbours(s):
                assert s in net.neighbours(nb)

    def test_overlapping_segments(self):
        with pytest.raises(NetworkError):
            ParameterSchedule([Segment(0, 2), Segment(1, 3)])

    def test_unknown_bond_name(self):
        net = kitaev_chain(3).with_schedule(ParameterSchedule([Segment(0, 1, bonds={"nope": 0.0})]))
        with pytest.raises(NetworkError):
            assemble(net, 0.5)


class TestSchedule:
    def test_smoothstep(self):
        x = np.linspace(0, 1, 11)
        np.testing.assert_allclose(smoothstep(x), 3 * x ** 2 - 2 * x ** 3)
        assert smoothstep(-1.0) == 0.0 and smoothstep(2.0) == 1.0

    def test_ramp_and_hold(self):
        net = kitaev_chain(3, mu=0.0).with_schedule(ParameterSchedule([
            Segment(0.0, 2.0, mu={1: 4.0}), Segment(2.0, 3.0), Segment(3.0, 4.0, mu={1: 0.0})]))
        mu_mid, _ = net.parameters(1.0)
        assert mu_mid[1] == pytest.approx(2.0)
        assert net.parameters(2.5)[0][1] == 4.0
        assert net.parameters(10.0)[0][1] == 0.0
        assert net.schedule.breakpoints() == [0.0, 2.0, 3.0, 4.0]

    def test_parameters_continuous(self):
        net = kitaev_chain(3).with_schedule(ParameterSchedule([
            Segment(0.0, 1.0, mu={0: 3.0}), Segment(1.0, 2.0, bonds={0: 0.2})]))
        for tb in (1.0, 2.0):
            a, b = net.parameters(tb - 1e-9), net.parameters(tb + 1e-9)
            np.testing.assert_allclose(a[0], b[0], atol=1e-6)
            np.testing.assert_allclose(a[1], b[1], atol=1e-6)

    def test_domain_wall_round_trip_restores_matrix(self):
        dev = TJunctionDevice(arm=6, leg=6, segment=3, ramp=1.0)
        there, t = dev.move("left", "right", 0.0)
        back, t = dev.move("right", "left", t)
        net = dev.base_network().with_schedule(ParameterSchedule(there + back))
        assert np.array_equal(assemble(net, t), assemble(net, 0.0))


class TestSpectrumProbe:
    @pytest.mark.parametrize("mu", [0.0, 0.5, -1.2])
    def test_topological_chain(self, mu):
        assert spectrum_probe(kitaev_chain(24, mu=mu)).n_zero == 2

    @pytest.mark.parametrize("mu", [2.5, -3.0, 10.0])
    def test_trivial_chain(self, mu):
        assert spectrum_probe(kitaev_chain(24, mu=mu)).n_zero == 0

    def test_relative_threshold(self):
        probe = spectrum_probe(kitaev_chain(10), rel_eps=1e-6)
        assert probe.n_zero == 2
        assert probe.eps_zero == pytest.approx(1e-6 * probe.bulk_gap)

    def test_coupler_dwell_splitting_stays_below_gap(self):
        dev = CouplerArrayDevice(n_segments=2, sites=6, coupler=0.2)
        gs, vals = dev.splitting_curve(2, 3)
        split = np.abs(vals)
        assert split[0] < 1e-12
        assert np.all(np.diff(split) >= -1e-12)
        gap = spectrum_probe(dev.base_network()).bulk_gap
        assert split[-1] < 0.2 * gap
