"""Test fidelities, budgets and tomography.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from gatebudget.budgets import (
    BudgetError, CalibratedGate, GateSeriesSpec, ErrorBudget, BudgetRunner,
    qubitize, qubitize_traced, state_set, avg_state_fidelity,
    average_gate_fidelity, calibrate_drag, calibrate_cz, conditional_phase,
    local_phase_target, budget_series, pauli_settings, pauli_labels,
    measure_in_setting, tomography_linear_inversion)
from gatebudget.config import load_config, mean_realization
from gatebudget.devices import (
    Gate, Settings, SingleQubitModel, CouplerModel, PAULI_X, CZ)
from gatebudget.hilbert import (
    InvalidArgument, TransmonParams, SystemSpec, ghz, mhz, system_hamiltonian,
    diagonalize)
from gatebudget.noise import DecoherenceParams
from gatebudget.pulses import CalibrationErrors, DistortionKernel
from gatebudget.sources import sources_for


BELL = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


class FakeRunner(object):

    def __init__(self, values, repetitions=(1, 3)):
        self.series = GateSeriesSpec(repetitions=repetitions)
        self.values = values

    def infidelities(self, settings):
        return {n: self.values[settings.frame] * n for n in self.series.repetitions}


class FakeSource(object):

    def __init__(self, name, terms, may_be_negative=False):
        self.name = name
        self._terms = terms
        self.may_be_negative = may_be_negative

    def terms(self, realization):
        return self._terms


class TestSeries(object):

    def test_validation(self):
        assert GateSeriesSpec(repetitions=[1, 3]).repetitions == (1, 3)
        with pytest.raises(InvalidArgument):
            GateSeriesSpec(repetitions=(3, 1))
        with pytest.raises(InvalidArgument):
            GateSeriesSpec(repetitions=(0, 1))
        with pytest.raises(InvalidArgument):
            GateSeriesSpec(gate='iswap')

    def test_calibration_json(self):
        cal = CalibratedGate('cz', -1.2, tau_c=20.0, phases=(0.1, 0.2))
        doc = cal.to_json()
        assert doc['phases'] == [0.1, 0.2]
        assert 'axis' not in doc
        assert CalibratedGate('drag', 0.2, 0.4).to_json()['theta_deg'] == 180.0


class TestErrorBudget(object):

    def test_relative_shares(self):
        budget = ErrorBudget({'a': {1: 1e-4, 3: 3e-4}, 'b': {1: 3e-4, 3: 1e-4}})
        rel = budget.relative()
        assert rel['a'][1] == pytest.approx(0.25)
        assert rel['b'][3] == pytest.approx(0.25)
        assert budget.repetitions == [1, 3]

    def test_json(self):
        budget = ErrorBudget({'T1': {1: 1e-4, 3: 3e-4}})
        again = ErrorBudget.from_json(budget.to_json())
        assert again.absolute == budget.absolute

    def test_csv(self, tmpdir):
        filename = str(tmpdir.join('budget.csv'))
        ErrorBudget({'T1': {1: 1e-4}}).write_csv(filename, realization=4)
        with open(filename) as f:
            rows = f.read().split()
        assert rows[1] == '4,T1,1,1.000000000e-04,1.000000000e+00'

    def test_sources_add_up(self):
        runner = FakeRunner({'rwa': 1e-4, 'lab': 3e-4})
        sources = [FakeSource('x', [(1.0, Settings('rwa'))]),
                   FakeSource('y', [(1.0, Settings('lab')), (-1.0, Settings('rwa'))])]
        budget = budget_series(runner, sources, None)
        assert budget.absolute['x'][3] == pytest.approx(3e-4)
        assert budget.absolute['y'][1] == pytest.approx(2e-4)
        assert not budget.flags

    def test_negative_contributions(self):
        runner = FakeRunner({'rwa': 3e-4, 'lab': 1e-4})
        terms = [(1.0, Settings('lab')), (-1.0, Settings('rwa'))]
        with pytest.raises(BudgetError):
            budget_series(runner, [FakeSource('y', terms)], None)
        budget = budget_series(runner, [FakeSource('y', terms, True)], None)
        assert budget.flags == [('y', 1), ('y', 3)]
        assert budget.absolute['y'][1] == pytest.approx(-2e-4)


class TestFidelities(object):

    def test_state_sets(self):
        one = state_set(1, 20, seed=3)
        assert one.shape == (20, 2)
        assert np.allclose(np.linalg.norm(one, axis=1), 1)
        assert np.allclose(one[0], [1, 0])
        two = state_set(2, 20, seed=3)
        assert two.shape == (20, 4)
        assert np.array_equal(two, state_set(2, 20, seed=3))
        with pytest.raises(InvalidArgument):
            state_set(3)

    def test_perfect_gate(self):
        states = state_set(1, 20)
        u = 1j * PAULI_X
        rhos = [np.outer(u @ s, (u @ s).conj()) for s in states]
        assert avg_state_fidelity(rhos, states, u) == pytest.approx(1.0)
        assert average_gate_fidelity(u, u) == pytest.approx(1.0)
        assert average_gate_fidelity(np.eye(2), PAULI_X) == pytest.approx(1 / 3)

    def test_qubitize(self):
        rho = np.diag([0.5, 0.3, 0.2])
        assert np.allclose(qubitize(rho, np.eye(3)[:, :2]), np.diag([0.5, 0.3]))

    def test_coupler_traced_out(self):
        q1 = TransmonParams(ghz(4.12), mhz(-194))
        c = TransmonParams(ghz(6.0), mhz(-100), omega_max=ghz(6.9),
                           role='coupler')
        q2 = TransmonParams(ghz(4.30), mhz(-187))
        spec = SystemSpec((q1, c, q2))
        frame = diagonalize(system_hamiltonian(spec))
        rho = np.zeros((27, 27))
        rho[12, 12] = 1.0   # |1, 1, 0>
        out = qubitize_traced(rho, frame, spec)
        assert out[2, 2] == pytest.approx(1.0)
        assert np.trace(out).real == pytest.approx(1.0)
        with pytest.raises(InvalidArgument):
            qubitize_traced(np.eye(3), frame, SystemSpec((q1,)))

    def test_rwa_runner(self):
        model = SingleQubitModel(TransmonParams(ghz(4.5), mhz(-200)))
        cal = calibrate_drag(model, np.pi, 'X', 'rwa')
        runner = BudgetRunner(model, {'rwa': cal}, GateSeriesSpec(repetitions=(1, 3)))
        coherent = runner.infidelities(Settings('rwa'))
        assert coherent[3] < 1e-4
        lossy = runner.infidelities(
            Settings('rwa', decoherence=DecoherenceParams(t1=(35.0,))))
        expected = 16.0 / (3 * 35000.0)
        assert 0.5 * expected < lossy[1] < 2 * expected
        assert lossy[3] > 2 * lossy[1]

    def test_amplitude_error_builds_up(self):
        model = SingleQubitModel(TransmonParams(ghz(4.5), mhz(-200)))
        cal = calibrate_drag(model, np.pi, 'X', 'rwa')
        runner = BudgetRunner(model, {'rwa': cal}, GateSeriesSpec(repetitions=(1, 3)))
        realization = SimpleNamespace(
            decoherence=DecoherenceParams(), kernel=DistortionKernel(),
            errors=CalibrationErrors(eps_A=2.0))
        [source] = [s for s in sources_for('sqg') if s.name == 'eps_A']
        budget = budget_series(runner, [source], realization)
        first, third = budget.absolute['eps_A'][1], budget.absolute['eps_A'][3]
        assert first > 0
        # coherent over-rotations add up, infidelity grows as N^2
        assert 6 < third / first < 12

    def test_drag_suppresses_leakage(self):
        model = SingleQubitModel(TransmonParams(ghz(4.5), mhz(-200)))
        cal = calibrate_drag(model, np.pi, 'X', 'rwa3')
        plain = CalibratedGate('drag', cal.amplitude, 0.0)

        def leakage(c):
            u = model.gate_unitary(Gate('X'), c, CalibrationErrors(), 0.0, 'rwa3')
            kept = qubitize(u, model.computational_basis('rwa3'))
            return 1 - np.sum(np.abs(kept) ** 2) / 2

        assert cal.beta != 0.0
        assert leakage(cal) * 10 <= leakage(plain)


class TestCzPhases(object):

    def test_conditional_phase(self):
        assert conditional_phase(CZ) == pytest.approx(np.pi)
        assert conditional_phase(np.eye(4)) == pytest.approx(0.0)

    def test_local_phase_target(self):
        a, b, c = 0.3, -0.7, 1.1
        u = np.diag(np.exp(1j * np.array([a, b, c, b + c - a + np.pi])))
        assert np.allclose(local_phase_target(u, 1), u)
        assert np.allclose(local_phase_target(u, 2),
                           np.diag(np.exp(1j * np.array([a, b, c, b + c - a]))))


class TestCzCalibration(object):

    @pytest.fixture(scope='class')
    def calibrated(self):
        realization = mean_realization(load_config(document={'gate': 'cz'}))
        model = CouplerModel(realization.system)
        cal = calibrate_cz(model)
        return model, cal, model.qubitized(model.gate_unitary(cal, dt=0.1))

    def test_duration_in_window(self, calibrated):
        _, cal, _ = calibrated
        assert 25.0 <= cal.tau_c <= 40.0
        assert cal.tau_c * 2.4 == pytest.approx(round(cal.tau_c * 2.4))

    def test_conditional_phase(self, calibrated):
        _, _, u = calibrated
        assert abs(conditional_phase(u) - np.pi) < 1e-3

    def test_noise_free_infidelity(self, calibrated):
        _, cal, u = calibrated
        assert cal.infidelity < 1e-3
        assert 1 - average_gate_fidelity(u, local_phase_target(u, 1)) \
            == pytest.approx(cal.infidelity)


class TestTomography(object):

    def test_settings(self):
        assert len(pauli_settings()) == 9
        assert pauli_labels()[:4] == ['II', 'IX', 'IY', 'IZ']

    def test_measure(self):
        rho = np.diag([1.0, 0, 0, 0])
        assert np.allclose(measure_in_setting(rho, 'ZZ'), [1, 0, 0, 0])
        assert np.allclose(measure_in_setting(rho, 'XX'), [0.25] * 4)
        with pytest.raises(InvalidArgument):
            measure_in_setting(rho, 'ZI')

    def test_bell_state(self):
        target = np.outer(BELL, BELL.conj())
        records = {s: measure_in_setting(target, s) for s in pauli_settings()}
        rho, vector = tomography_linear_inversion(records)
        assert np.allclose(rho, target)
        expect = dict(zip(pauli_labels(), vector))
        assert expect['XX'] == pytest.approx(1.0)
        assert expect['YY'] == pytest.approx(-1.0)
        assert expect['ZZ'] == pytest.approx(1.0)
        assert expect['XI'] == pytest.approx(0.0, abs=1e-12)

    def test_counts_are_normalised(self):
        records = {s: [250, 250, 250, 250] for s in pauli_settings()}
        rho, _ = tomography_linear_inversion(records)
        assert np.allclose(rho, np.eye(4) / 4)
        del records['XY']
        with pytest.raises(InvalidArgument):
            tomography_linear_inversion(records)
