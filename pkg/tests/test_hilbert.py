"""Test the operator algebra.
"""

import numpy as np
import pytest

from gatebudget import hilbert
from gatebudget.hilbert import (
    InvalidArgument, TransmonParams, SystemSpec, ghz, mhz, annihilation,
    number, embed, sqg_hamiltonian, system_hamiltonian, diagonalize,
    identify_computational_states, assign_product_labels, vectorize,
    devectorize, liouvillian_unitary, dissipator_superop, lindblad_rhs,
    zz_coupling, find_idle_point)


def cz_system(beta_qc=0.0, beta_qq=0.0, coupler=6.0):
    q1 = TransmonParams(ghz(4.12), mhz(-194))
    c = TransmonParams(ghz(coupler), mhz(-100), omega_max=ghz(6.9),
                       role='coupler')
    q2 = TransmonParams(ghz(4.30), mhz(-187))
    beta = [[0, beta_qc, beta_qq], [beta_qc, 0, beta_qc], [beta_qq, beta_qc, 0]]
    return SystemSpec((q1, c, q2), beta)


def random_rho(dim, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = z @ z.conj().T
    return rho / np.trace(rho)


class TestParams(object):

    def test_units(self):
        assert ghz(1.0) == pytest.approx(2 * np.pi)
        assert mhz(1000.0) == pytest.approx(ghz(1.0))

    def test_validation(self):
        with pytest.raises(InvalidArgument):
            TransmonParams(ghz(4.5), mhz(200))
        with pytest.raises(InvalidArgument):
            TransmonParams(ghz(4.5), mhz(-200), levels=1)
        with pytest.raises(InvalidArgument):
            TransmonParams(ghz(7.0), mhz(-100), omega_max=ghz(6.9))

    def test_json(self):
        p = TransmonParams(ghz(6.0), mhz(-100), omega_max=ghz(6.9),
                           role='coupler')
        q = TransmonParams.from_json(p.to_json())
        assert q.omega == pytest.approx(p.omega)
        assert q.omega_max == pytest.approx(p.omega_max)
        assert q.alpha == pytest.approx(p.alpha)
        assert (q.levels, q.role) == (3, 'coupler')

    def test_system_validation(self):
        q = TransmonParams(ghz(4.3), mhz(-200))
        with pytest.raises(InvalidArgument):
            SystemSpec((q, q), [[0, 1e-3], [2e-3, 0]])
        with pytest.raises(InvalidArgument):
            SystemSpec((q, q), [[1e-3, 0], [0, 0]])
        # Q1, C, Q2 ordering with Q2 above Q1
        spec = cz_system()
        with pytest.raises(InvalidArgument):
            SystemSpec((spec.elements[2], spec.elements[1], spec.elements[0]))
        assert spec.dims == (3, 3, 3)
        assert spec.total_dim == 27
        assert spec.coupler_index == 1


class TestOperators(object):

    def test_ladder(self):
        a = annihilation(3)
        assert np.allclose(a.conj().T @ a, number(3))
        with pytest.raises(InvalidArgument):
            annihilation(1)

    def test_embed(self):
        n = embed(number(2), 1, (3, 2))
        assert n.shape == (6, 6)
        assert np.allclose(np.diag(n), [0, 1, 0, 1, 0, 1])

    def test_sqg_spectrum(self):
        p = TransmonParams(ghz(4.5), mhz(-200))
        e = np.real(np.diag(sqg_hamiltonian(p)))
        assert np.allclose(e, [0, p.omega, 2 * p.omega + p.alpha])

    def test_coupling_counted_once(self):
        q1 = TransmonParams(ghz(4.0), mhz(-200), levels=2)
        q2 = TransmonParams(ghz(4.4), mhz(-200), levels=2)
        spec = SystemSpec((q1, q2), [[0, 0.01], [0.01, 0]])
        h = system_hamiltonian(spec)
        g = 0.01 * np.sqrt(q1.omega * q2.omega)
        # |01> and |10> sit at indices 1 and 2
        assert abs(h[1, 2]) == pytest.approx(g)
        assert np.allclose(h, h.conj().T)

    def test_diagonalize_rejects(self):
        with pytest.raises(InvalidArgument):
            diagonalize(np.array([[0, 1], [0, 0]]))
        with pytest.raises(InvalidArgument):
            diagonalize(np.zeros((2, 3)))


class TestLabelling(object):

    def test_uncoupled_labels(self):
        spec = cz_system()
        frame = diagonalize(system_hamiltonian(spec)).labelled(spec)
        vectors = frame.computational_vectors()
        for k, bare in enumerate((0, 1, 9, 10)):
            assert abs(vectors[bare, k]) == pytest.approx(1.0)
        assert all(v == pytest.approx(1.0) for v in frame.overlaps.values())

    def test_single_transmon(self):
        p = TransmonParams(ghz(4.5), mhz(-200))
        spec = SystemSpec((p,))
        frame = diagonalize(sqg_hamiltonian(p))
        assert identify_computational_states(frame, spec) == {'0': 0, '1': 1}

    def test_product_labels_are_a_bijection(self):
        spec = cz_system(beta_qc=15e-3, beta_qq=1e-3)
        frame = diagonalize(system_hamiltonian(spec))
        labels = assign_product_labels(frame, spec.dims)
        assert len(set(labels)) == spec.total_dim
        assert labels[0] == (0, 0, 0)

    def test_uncoupled_zz_vanishes(self):
        spec = cz_system()
        assert abs(zz_coupling(spec, ghz(6.0))) < 1e-9

    def test_idle_point_needs_room(self):
        spec = cz_system(beta_qc=15e-3)
        spec = spec.with_element(1, omega=ghz(4.5), omega_max=ghz(4.5))
        with pytest.raises(InvalidArgument):
            find_idle_point(spec)

    def test_idle_point_without_zero_crossing(self, monkeypatch):
        monkeypatch.setattr(hilbert, 'zz_coupling', lambda spec, w: 1e-3 + w)
        spec = cz_system(beta_qc=15e-3)
        with pytest.warns(RuntimeWarning):
            idle = find_idle_point(spec)
        assert idle == pytest.approx(spec.elements[2].omega + ghz(0.4))


class TestSuperoperators(object):

    def test_vectorize(self):
        rho = random_rho(3)
        assert np.allclose(devectorize(vectorize(rho)), rho)
        stack = np.stack([rho, rho.T])
        assert vectorize(stack).shape == (2, 9)
        with pytest.raises(InvalidArgument):
            devectorize(np.zeros(8))

    def test_liouvillian_matches_commutator(self):
        p = TransmonParams(ghz(4.5), mhz(-200))
        h = sqg_hamiltonian(p, drive=0.3)
        rho = random_rho(3, seed=1)
        lhs = devectorize(liouvillian_unitary(h) @ vectorize(rho))
        assert np.allclose(lhs, -1j * (h @ rho - rho @ h))

    def test_dissipator_matches_rhs(self):
        a = annihilation(3)
        jumps = [(0.02, a), (0.001, a.conj().T), (0.01, np.sqrt(2) * number(3))]
        rho = random_rho(3, seed=2)
        lhs = devectorize(dissipator_superop(jumps) @ vectorize(rho))
        assert np.allclose(lhs, lindblad_rhs(np.zeros((3, 3)), jumps, rho))

    def test_dissipator_rejects(self):
        with pytest.raises(InvalidArgument):
            dissipator_superop([(-1.0, annihilation(2))])
        with pytest.raises(InvalidArgument):
            dissipator_superop([])
        assert not dissipator_superop([], dim=2).any()
