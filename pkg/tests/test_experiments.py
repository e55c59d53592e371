"""Test the characterisation suites and emulated records.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from gatebudget.budgets import CalibratedGate, pauli_settings
from gatebudget.devices import SingleQubitModel
from gatebudget.experiments import (
    Circuit, ExperimentSuite, sqg_suite, tqg_suite, full_settings,
    simulate_record)
from gatebudget.hilbert import InvalidArgument, TransmonParams, ghz, mhz
from gatebudget.noise import DecoherenceParams
from gatebudget.pulses import CalibrationErrors, DistortionKernel, area_seed


def quiet_realization():
    return SimpleNamespace(
        seed=5, decoherence=DecoherenceParams(teff=0.0),
        errors=CalibrationErrors(), kernel=DistortionKernel(),
        readout=((0.0, 0.0),))


class TestSuites(object):

    def test_sqg_suite(self):
        suite = sqg_suite(repetitions=2)
        assert len(suite.circuits) == 24
        assert suite.feature_names[:2] == ['p1_+X', 'p1_-X']
        assert 'p1_-Y.I' in suite.feature_names
        # G1 (G1' G1)^2 and the same followed by G2
        assert len(suite.circuits[0].gates) == 5
        assert len(suite.circuits[4].gates) == 6

    def test_placeholders_take_the_gate_angle(self):
        suite = sqg_suite(theta=np.pi / 2, repetitions=1)
        assert [str(g) for g in suite.circuits[0].gates] == ['+X90', '-X90', '+X90']

    def test_tqg_suite(self):
        suite = tqg_suite()
        assert [c.n_cz for c in suite.circuits] == [3, 5, 7]
        assert len(suite.feature_names) == 48
        assert suite.feature_names[0] == 'N3_II'

    def test_tomography_settings_required(self):
        with pytest.raises(InvalidArgument):
            ExperimentSuite('cz', (Circuit('N1', n_cz=1, settings=('XX',)),))
        ExperimentSuite('cz', (Circuit('N1', n_cz=1,
                                       settings=tuple(pauli_settings())),))

    def test_full_settings(self):
        r = SimpleNamespace(
            errors=CalibrationErrors(eps_A=0.1),
            decoherence=DecoherenceParams(t1=(35.0,), tphi_1f=(15.0,)),
            kernel=DistortionKernel())
        settings = full_settings(r, 'rwa3')
        assert settings.stochastic and settings.dissipative
        assert settings.errors.eps_A == 0.1


class TestRecords(object):

    def test_sqg_record(self):
        device = SingleQubitModel(TransmonParams(ghz(4.5), mhz(-200)))
        cal = CalibratedGate('drag', area_seed(np.pi, 4.0, 16.0))
        suite = sqg_suite(repetitions=1, shots=1000)
        record = simulate_record(suite, device, {'rwa3': cal},
                                 quiet_realization(), n_traj=1)
        assert record.features.shape == (24,)
        assert len(record.counts) == 48
        names = suite.feature_names
        # a single pi pulse leaves the qubit excited
        assert record.features[names.index('p1_+X')] > 0.9
        # a pi pulse and its inverse bring it back
        assert record.features[names.index('p1_+X.-X')] < 0.1
        again = simulate_record(suite, device, {'rwa3': cal},
                                quiet_realization(), n_traj=1)
        assert np.array_equal(record.features, again.features)
