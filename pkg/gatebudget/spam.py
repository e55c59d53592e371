"""State preparation and measurement: thermal initial states, readout of
the computational subspace with leakage renormalisation, misclassification
and finite shots.
"""

import csv
import functools
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .hilbert import KB_OVER_HBAR, InvalidArgument, diagonalize
from .noise import substream


__all__ = ('MeasurementError', 'MeasurementModel', 'bitstrings',
           'thermal_state', 'single_confusion', 'confusion_matrix',
           'measure_probs', 'apply_confusion', 'sample_shots',
           'write_counts_csv')


log = logging.getLogger(__name__)


class MeasurementError(Exception):
    pass


def bitstrings(n_qubits):
    return [''.join(b) for b in itertools.product('01', repeat=n_qubits)]


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    confusion: np.ndarray
    n_shots: int = 4000
    seed: int = 0

    def __post_init__(self):
        m = np.asarray(self.confusion, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument('confusion matrix must be square')
        if np.any(m < 0) or np.max(np.abs(m.sum(axis=0) - 1)) > 1e-12:
            raise InvalidArgument('confusion matrix must be column stochastic')
        if self.n_shots < 1:
            raise InvalidArgument('need at least one shot')
        object.__setattr__(self, 'confusion', m)


def thermal_state(h, teff):
    """Gibbs state of ``h``; the ground state projector at zero temperature."""
    frame = diagonalize(h)
    e = frame.energies - frame.energies[0]
    if teff <= 0:
        weights = np.zeros_like(e)
        weights[0] = 1.0
    else:
        weights = np.exp(-e / (KB_OVER_HBAR * teff))
    weights /= weights.sum()
    v = frame.vectors
    return (v * weights) @ v.conj().T


def single_confusion(p01, p10):
    """Columns: prepared 0, 1. p01 is P(read 0 | prepared 1)."""
    return np.array([[1 - p10, p01],
                     [p10, 1 - p01]])


def confusion_matrix(pairs):
    """Tensor product of per-qubit (p01, p10) confusions, Q1 first."""
    return functools.reduce(np.kron, [single_confusion(*p) for p in pairs])


def measure_probs(rho, basis):
    """Computational-basis probabilities of the qubitized state.

    ``basis`` holds the computational states as columns. Population
    outside the subspace is renormalised away.
    """
    basis = np.asarray(basis)
    rho_q = basis.conj().T @ rho @ basis
    diag = np.clip(np.real(np.diagonal(rho_q, axis1=-2, axis2=-1)), 0.0, None)
    trace = diag.sum(axis=-1, keepdims=True)
    if np.any(trace < 1e-9):
        raise MeasurementError('no population left in the computational subspace')
    return diag / trace


def apply_confusion(p, model):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != model.confusion.shape[0]:
        raise InvalidArgument('probability vector does not match confusion matrix')
    return p @ model.confusion.T


def sample_shots(p, n_shots, seed, *key):
    """Multinomial counts drawn from the (seed, *key) substream."""
    if n_shots < 1:
        raise InvalidArgument('need at least one shot')
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p = p / p.sum()
    return substream(seed, *key).multinomial(n_shots, p)


def write_counts_csv(filename, records):
    """Rows of (circuit_id, bitstring, count)."""
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['circuit_id', 'bitstring', 'count'])
        for row in records:
            writer.writerow(row)
