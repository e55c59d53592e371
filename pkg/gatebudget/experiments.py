"""Characterisation experiments and their emulated measurement records.

The single-qubit suite strings rotations so that amplitude errors either
build up or cancel; the two-qubit suite runs CZ series between fixed
single-qubit layers and reads them out by state tomography.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .budgets import (
    pauli_settings, pauli_labels, measure_in_setting, qubitize,
    tomography_linear_inversion)
from .devices import Gate, Settings
from .hilbert import InvalidArgument, sqg_hamiltonian
from .parsing import expand
from .propagator import evolve
from .spam import (
    MeasurementModel, thermal_state, confusion_matrix, measure_probs,
    apply_confusion, sample_shots, bitstrings)


__all__ = ('SQG_TEMPLATES', 'TQG_SERIES', 'Circuit', 'ExperimentSuite',
           'MeasurementRecord', 'sqg_suite', 'tqg_suite', 'full_settings',
           'simulate_record')


log = logging.getLogger(__name__)


SQG_TEMPLATES = ("@@G1@@ (@@G1@@' @@G1@@)^N",
                 "@@G1@@ (@@G1@@' @@G1@@)^N @@G2@@")

G1_CHOICES = ('+X', '-X', '+Y', '-Y')
G2_CHOICES = ('+X', '-X', '+Y', '-Y', 'I')

TQG_SERIES = (3, 5, 7)


@dataclass(frozen=True)
class Circuit:
    id: str
    gates: tuple = ()
    n_cz: int = 0
    settings: tuple = ()


@dataclass(frozen=True)
class ExperimentSuite:
    gate: str
    circuits: tuple
    shots: int = 2000
    theta: float = np.pi

    def __post_init__(self):
        if self.gate == 'cz':
            for c in self.circuits:
                if sorted(c.settings) != sorted(pauli_settings()):
                    raise InvalidArgument('circuit %s lacks Pauli settings' % c.id)

    @property
    def feature_names(self):
        if self.gate == 'sqg':
            return ['p1_%s' % c.id for c in self.circuits]
        return ['%s_%s' % (c.id, p) for c in self.circuits for p in pauli_labels()]


@dataclass
class MeasurementRecord:
    features: np.ndarray
    counts: list = field(default_factory=list)


def sqg_suite(theta=np.pi, repetitions=25, shots=2000, templates=SQG_TEMPLATES):
    """One circuit per template and choice of its placeholders."""
    circuits = []
    for template in templates:
        uses_g2 = '@@G2@@' in template
        for g1, g2 in itertools.product(G1_CHOICES, G2_CHOICES if uses_g2 else ('',)):
            gates = expand(template, {'G1': g1, 'G2': g2},
                           {'N': repetitions}, theta)
            name = g1 + (('.' + g2) if g2 else '')
            circuits.append(Circuit(name, tuple(gates)))
    log.debug('single-qubit suite of %d circuits', len(circuits))
    return ExperimentSuite('sqg', tuple(circuits), shots, theta)


def tqg_suite(series=TQG_SERIES, shots=2000):
    circuits = tuple(Circuit('N%d' % n, n_cz=n, settings=tuple(pauli_settings()))
                     for n in series)
    return ExperimentSuite('cz', circuits, shots, np.pi / 2)


def full_settings(realization, frame):
    """Every imperfection of the realization switched on at once."""
    return Settings(frame=frame, errors=realization.errors,
                    decoherence=realization.decoherence,
                    one_over_f=tuple(realization.decoherence.tphi_1f),
                    kernel=realization.kernel)


def _readout(realization, shots):
    return MeasurementModel(confusion_matrix(realization.readout), shots,
                            realization.seed)


def _sqg_record(suite, device, calibrations, realization, n_traj, ensembles):
    settings = full_settings(realization, 'rwa3')
    cal = calibrations['rwa3']
    params = replace(device.params, levels=3)
    rho0 = thermal_state(sqg_hamiltonian(params), realization.decoherence.teff)
    basis = device.computational_basis('rwa3')
    readout = _readout(realization, suite.shots)
    features, counts = [], []
    for k, circuit in enumerate(suite.circuits):
        plan = device.plan(list(circuit.gates), cal, settings, 0.1,
                           n_traj=n_traj, ensembles=ensembles,
                           seed=realization.seed, stream=k)
        rho = evolve(plan, rho0).states[-1]
        p = apply_confusion(measure_probs(rho, basis), readout)
        shots = sample_shots(p, suite.shots, realization.seed, 1, k)
        features.append(shots[1] / suite.shots)
        counts.extend((circuit.id, b, int(c)) for b, c in zip(bitstrings(1), shots))
    return MeasurementRecord(np.array(features), counts)


def _tqg_record(suite, device, calibrations, realization, n_traj, ensembles):
    settings = full_settings(realization, 'lab')
    cal = calibrations['lab']
    rho0 = thermal_state(device.h_idle, realization.decoherence.teff)
    y90 = Gate('Y', np.pi / 2).ideal()
    x90 = Gate('X', np.pi / 2).ideal()
    before = device.embed_local(np.kron(y90, y90))
    after = device.embed_local(np.kron(x90, x90))
    rho0 = before @ rho0 @ before.conj().T
    series = [c.n_cz for c in suite.circuits]
    plan = device.plan(cal, max(series), settings, 0.1, checkpoints=series,
                       n_traj=n_traj, ensembles=ensembles, seed=realization.seed)
    result = evolve(plan, rho0)
    readout = _readout(realization, suite.shots)
    features, counts = [], []
    for k, (circuit, rho) in enumerate(zip(suite.circuits, result.states)):
        rho = after @ rho @ after.conj().T
        rho_q = qubitize(rho, device.basis)
        records = {}
        for j, setting in enumerate(circuit.settings):
            p = apply_confusion(measure_in_setting(rho_q, setting), readout)
            shots = sample_shots(p, suite.shots, realization.seed, 2, k, j)
            records[setting] = shots
            counts.extend(('%s_%s' % (circuit.id, setting), b, int(c))
                          for b, c in zip(bitstrings(2), shots))
        _, vector = tomography_linear_inversion(records)
        features.extend(vector)
    return MeasurementRecord(np.array(features), counts)


def simulate_record(suite, device, calibrations, realization, n_traj=200,
                    ensembles=None):
    """Emulated measurement record of ``suite`` under every noise source.

    Single-qubit records hold the excited-state probability per circuit;
    two-qubit records the 16 Pauli expectations per circuit.
    """
    if suite.gate == 'sqg':
        return _sqg_record(suite, device, calibrations, realization, n_traj,
                           ensembles)
    return _tqg_record(suite, device, calibrations, realization, n_traj,
                       ensembles)
