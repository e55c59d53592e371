"""Gate calibration, averaged state fidelities, per-source error budgets
over gate series and linear-inversion tomography.
"""

import csv
import itertools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .hilbert import InvalidArgument, assign_product_labels
from .noise import DecoherenceParams, substream
from .propagator import evolve, evolve_kets, plan_unitaries
from .pulses import SAMPLE_RATE, CalibrationErrors, area_seed
from .devices import (
    Gate, EnsembleCache, PAULI_X, PAULI_Y, PAULI_Z, CZ)


__all__ = ('CalibrationFailed', 'BudgetError', 'CalibratedGate',
           'GateSeriesSpec', 'ErrorBudget', 'qubitize', 'qubitize_traced',
           'state_set', 'avg_state_fidelity', 'average_gate_fidelity',
           'calibrate_drag', 'calibrate_cz', 'conditional_phase',
           'local_phase_target', 'BudgetRunner', 'budget_series',
           'pauli_settings', 'pauli_labels', 'measure_in_setting',
           'tomography_linear_inversion')


log = logging.getLogger(__name__)


class CalibrationFailed(Exception):
    def __init__(self, message, best=None):
        Exception.__init__(self, message)
        self.best = best


class BudgetError(Exception):
    pass


@dataclass(frozen=True)
class CalibratedGate:
    kind: str
    amplitude: float
    beta: float = 0.0
    tau_c: float = None
    infidelity: float = 0.0
    frame: str = 'lab'
    theta: float = np.pi
    axis: str = 'X'
    # continuous optimum minus the grid-snapped tau_c
    tau_c_residual: float = 0.0
    phases: tuple = ()

    def to_json(self):
        doc = {'kind': self.kind, 'amplitude': self.amplitude,
               'beta': self.beta, 'infidelity': self.infidelity,
               'frame': self.frame}
        if self.kind == 'cz':
            doc.update(tau_c=self.tau_c, tau_c_residual=self.tau_c_residual,
                       phases=list(self.phases))
        else:
            doc.update(theta_deg=float(np.degrees(self.theta)), axis=self.axis)
        return doc


@dataclass(frozen=True)
class GateSeriesSpec:
    gate: str = 'sqg'
    repetitions: tuple = (1, 3, 5, 7, 9)
    theta: float = np.pi
    axis: str = 'X'
    idle: float = 16.0

    def __post_init__(self):
        reps = tuple(int(n) for n in self.repetitions)
        if not reps or reps[0] < 1 or any(b <= a for a, b in zip(reps, reps[1:])):
            raise InvalidArgument('repetitions must be strictly increasing '
                                  'positive integers, got %r' % (reps,))
        if self.gate not in ('sqg', 'cz'):
            raise InvalidArgument('unknown gate %r' % self.gate)
        object.__setattr__(self, 'repetitions', reps)

    @property
    def operation(self):
        return Gate(self.axis, self.theta)


@dataclass
class ErrorBudget:
    """Infidelity contribution per source and repetition count."""

    absolute: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def repetitions(self):
        return sorted({n for per_n in self.absolute.values() for n in per_n})

    def relative(self):
        out = {s: {} for s in self.absolute}
        for n in self.repetitions:
            total = sum(v[n] for v in self.absolute.values() if n in v)
            for s, v in self.absolute.items():
                if n in v:
                    out[s][n] = v[n] / total if total else 0.0
        return out

    def to_json(self):
        rel = self.relative()
        return {s: {str(n): {'absolute': v, 'relative': rel[s][n]}
                    for n, v in per_n.items()}
                for s, per_n in self.absolute.items()}

    @classmethod
    def from_json(cls, doc):
        return cls({s: {int(n): float(e['absolute']) for n, e in per_n.items()}
                    for s, per_n in doc.items()})

    def rows(self):
        rel = self.relative()
        for s, per_n in self.absolute.items():
            for n, v in sorted(per_n.items()):
                yield s, n, v, rel[s][n]

    def write_csv(self, filename, realization=None):
        with open(filename, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['realization', 'source', 'N', 'absolute', 'relative'])
            for s, n, a, r in self.rows():
                writer.writerow([realization, s, n, '%.9e' % a, '%.9e' % r])


def qubitize(rho, basis):
    """Principal submatrix on the computational states (columns of ``basis``).

    The trace is left as it is; leakage shows up as trace below one.
    """
    basis = np.asarray(basis)
    return basis.conj().T @ np.asarray(rho) @ basis


def qubitize_traced(rho, frame, spec):
    """Computational block of the Q1-Q2 state with the coupler traced out."""
    if len(spec.elements) != 3:
        raise InvalidArgument('needs a two-qubit system with a coupler')
    labels = assign_product_labels(frame, spec.dims)
    index = {lab: k for k, lab in enumerate(labels)}
    v = frame.vectors
    r = v.conj().T @ np.asarray(rho) @ v
    out = np.zeros(r.shape[:-2] + (4, 4), dtype=complex)
    bits = list(itertools.product((0, 1), repeat=2))
    for c in range(spec.dims[1]):
        rows = [index[(i, c, j)] for i, j in bits]
        out += r[..., rows, :][..., :, rows]
    return out


def _haar_kets(dim, count, rng):
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _stabilizer_kets():
    s = 1 / np.sqrt(2)
    return np.array([[1, 0], [0, 1], [s, s], [s, -s], [s, 1j * s], [s, -1j * s]],
                    dtype=complex)


def state_set(n_qubits=1, count=20, seed=0):
    """Fixed reference states: stabilizer states topped up with Haar states.

    One qubit: the 6 stabilizer states. Two qubits: 14 of the 36
    stabilizer products chosen by seed.
    """
    rng = substream(seed, 7, n_qubits)
    stab = _stabilizer_kets()
    if n_qubits == 1:
        pool = stab
        n_stab = 6
    elif n_qubits == 2:
        pool = np.array([np.kron(a, b) for a in stab for b in stab])
        n_stab = 14
    else:
        raise InvalidArgument('state sets exist for one or two qubits')
    n_stab = min(n_stab, count)
    chosen = pool[np.sort(rng.choice(len(pool), n_stab, replace=False))] \
        if n_stab < len(pool) else pool
    haar = _haar_kets(2 ** n_qubits, count - n_stab, rng)
    return np.concatenate([chosen, haar])


def avg_state_fidelity(rhos, states, unitary):
    """Mean of <psi|U^dag rho_psi U|psi> over the reference states.

    ``rhos`` are the (possibly unnormalised) qubitized outputs, one per
    reference state.
    """
    targets = np.asarray(states) @ np.asarray(unitary).T
    values = np.einsum('si,sij,sj->s', targets.conj(), np.asarray(rhos), targets)
    return float(np.mean(values.real))


def average_gate_fidelity(operator, target):
    """Haar-averaged fidelity of rho -> M rho M^dag to a unitary target."""
    d = target.shape[0]
    m = target.conj().T @ operator
    return float((np.abs(np.trace(m)) ** 2
                  + np.real(np.trace(operator.conj().T @ operator))) / (d * (d + 1)))


def calibrate_drag(model, theta=np.pi, axis='X', frame='lab', tol=1e-9):
    """Noise-free pulse parameters for one rotation.

    In the two-level frame only the amplitude is searched; elsewhere
    (A, beta) go through Nelder-Mead from the best DRAG seed.
    """
    gate = Gate(axis, theta)
    target = gate.ideal()
    basis = model.computational_basis(frame)
    errors = CalibrationErrors()
    a0 = area_seed(theta, model.sigma, model.duration)
    levels = np.arange(model.levels(frame))
    shift = model.params.omega if frame == 'lab' else 0.0

    def fidelity(amplitude, beta):
        cal = CalibratedGate('drag', float(amplitude), float(beta))
        u = model.gate_unitary(gate, cal, errors, 0.0, frame)
        u = np.exp(1j * shift * levels * model.duration)[:, None] * u
        return average_gate_fidelity(qubitize(u, basis), target)

    if frame == 'rwa':
        res = optimize.minimize_scalar(
            lambda a: 1 - fidelity(a, 0.0), bounds=(0.8 * a0, 1.2 * a0),
            method='bounded', options={'xatol': 1e-10 * a0})
        amplitude, beta, best = res.x, 0.0, 1 - res.fun
    else:
        alpha = abs(model.params.alpha)
        seeds = [0.0, 1 / alpha, -1 / alpha, 0.5 / alpha, -0.5 / alpha]
        start = max(seeds, key=lambda b: fidelity(a0, b))
        res = optimize.minimize(
            lambda x: 1 - fidelity(*x), [a0, start], method='Nelder-Mead',
            options={'xatol': 1e-9, 'fatol': tol, 'maxiter': 400})
        (amplitude, beta), best = res.x, 1 - res.fun
    log.info('DRAG %s%d in %s frame: A=%.6g beta=%.4g, 1-F=%.3g',
             axis, round(np.degrees(theta)), frame, amplitude, beta, 1 - best)
    if best < 0.99:
        raise CalibrationFailed('DRAG calibration stuck at F=%.4f' % best, best)
    return CalibratedGate('drag', float(amplitude), float(beta),
                          infidelity=float(1 - best), frame=frame,
                          theta=theta, axis=axis)


def conditional_phase(unitary4):
    """theta_11 - theta_10 - theta_01 + theta_00, in [0, 2 pi)."""
    th = np.angle(np.diagonal(unitary4))
    return float(np.mod(th[3] - th[2] - th[1] + th[0], 2 * np.pi))


def local_phase_target(unitary4, n=1):
    """CZ^n dressed with the single-qubit Z phases read off ``unitary4``."""
    th = np.angle(np.diagonal(unitary4))
    local = np.exp(1j * np.array([th[0], th[1], th[2], th[1] + th[2] - th[0]]))
    return np.diag(local) @ np.linalg.matrix_power(CZ, n)


def _cz_infidelity(model, amplitude, tau_c, dt):
    cal = CalibratedGate('cz', float(amplitude), tau_c=float(tau_c))
    u = model.qubitized(model.gate_unitary(cal, dt=dt))
    return 1 - average_gate_fidelity(u, local_phase_target(u, 1)), u


def calibrate_cz(model, tau_range=(25.0, 40.0), grid=(16, 8), dt=0.1):
    """(A, tau_c) of the noise-free CZ, tau_c snapped to the sample grid.

    The gate is propagated on the ``dt`` grid the budget runs use, and
    tau_c stays inside ``tau_range``.
    """
    coupler_floor = model.spec.elements[2].omega + 2 * np.pi * 0.1
    a_min = -(model.idle - coupler_floor)
    amps = np.linspace(a_min, 0.1 * a_min, grid[0])
    taus = np.linspace(tau_range[0], tau_range[1], grid[1])

    def objective(x):
        a, tau = x
        if not a_min <= a < 0 or not tau_range[0] <= tau <= tau_range[1]:
            return 1.0
        return _cz_infidelity(model, a, tau, dt)[0]

    scan = [(objective((a, tau)), a, tau) for a in amps for tau in taus]
    _, a, tau = min(scan)
    log.debug('CZ coarse scan best A=%.4g tau_c=%.3g', a, tau)
    res = optimize.minimize(objective, [a, tau], method='Nelder-Mead',
                            options={'xatol': 1e-6, 'fatol': 1e-10,
                                     'maxiter': 300})
    a, tau = res.x
    snapped = round(tau * SAMPLE_RATE) / SAMPLE_RATE
    snapped = min(max(snapped, tau_range[0]), tau_range[1])
    lo, hi = sorted((0.95 * a, 1.05 * a))
    res = optimize.minimize_scalar(
        lambda x: objective((x, snapped)), bounds=(lo, hi), method='bounded',
        options={'xatol': 1e-10})
    infidelity, u = _cz_infidelity(model, res.x, snapped, dt)
    th = np.angle(np.diagonal(u))
    log.info('CZ calibrated: A=%.5g rad/ns tau_c=%.4g ns, 1-F=%.3g, '
             'phase=%.6f', res.x, snapped, infidelity, conditional_phase(u))
    if infidelity > 1e-2:
        raise CalibrationFailed('CZ calibration stuck at 1-F=%.3g' % infidelity,
                                1 - infidelity)
    return CalibratedGate('cz', float(res.x), tau_c=float(snapped),
                          infidelity=float(infidelity), frame='lab',
                          tau_c_residual=float(tau - snapped),
                          phases=(float(th[2] - th[0]), float(th[1] - th[0])))


class BudgetRunner(object):
    """Evaluates gate series for one device and calibration set.

    Results are memoised per ``Settings`` so sources sharing a run (the
    noise-free baseline in particular) evaluate it once.
    """

    dt = {'rwa': 0.1, 'rwa3': 0.1, 'lab': 0.02, 'flux': 0.1}

    def __init__(self, device, calibrations, series, states=None, n_traj=200,
                 seed=0, ensembles=None, dt=None):
        self.device = device
        self.calibrations = calibrations
        self.series = series
        n_qubits = 2 if series.gate == 'cz' else 1
        self.states = state_set(n_qubits, 20, seed) if states is None else states
        self.n_traj = n_traj
        self.seed = seed
        self.ensembles = ensembles or EnsembleCache(seed)
        if dt:
            self.dt = dict(self.dt, **dt)
        self._memo = {}
        self._references = {}

    def _plan(self, settings, checkpoints):
        series = self.series
        kw = dict(checkpoints=checkpoints, n_traj=self.n_traj,
                  ensembles=self.ensembles, seed=self.seed)
        if series.gate == 'cz':
            return self.device.plan(self.calibrations['lab'], checkpoints[-1],
                                    settings, self.dt['flux'],
                                    idle_time=series.idle, **kw)
        gates = [series.operation] * checkpoints[-1]
        whole = settings.coherent and settings.frame == 'lab'
        return self.device.plan(gates, self.calibrations[settings.frame],
                                settings, self.dt[settings.frame],
                                whole_gates=whole, **kw)

    def _basis(self, settings):
        if self.series.gate == 'cz':
            return self.device.basis
        return self.device.computational_basis(settings.frame)

    def references(self, settings):
        """Qubitized coherent propagators of the CZ series per checkpoint."""
        coherent = replace(settings, decoherence=DecoherenceParams(),
                           one_over_f=())
        if coherent not in self._references:
            plan = self._plan(coherent, self.series.repetitions)
            self._references[coherent] = [self.device.qubitized(u)
                                          for u in plan_unitaries(plan)]
        return self._references[coherent]

    def infidelities(self, settings):
        if settings in self._memo:
            return self._memo[settings]
        reps = self.series.repetitions
        plan = self._plan(settings, reps)
        basis = self._basis(settings)
        kets = self.states @ basis.T
        if settings.dissipative:
            result = evolve(plan, kets[:, :, None] * kets[:, None, :].conj())
        else:
            result = evolve_kets(plan, kets)
        refs = self.references(settings) if self.series.gate == 'cz' else None
        out = {}
        for k, (n, t, rho) in enumerate(zip(reps, plan.checkpoint_times(),
                                            result.states)):
            if refs is not None:
                target = local_phase_target(refs[k], n)
            else:
                rho = self.device.to_qubit_frame(rho, t, settings.frame,
                                                 settings.errors)
                target = np.linalg.matrix_power(self.series.operation.ideal(), n)
            out[n] = 1 - avg_state_fidelity(qubitize(rho, basis), self.states,
                                            target)
        log.debug('series in %s frame: %s', settings.frame,
                  ', '.join('N=%d %.3g' % kv for kv in out.items()))
        self._memo[settings] = out
        return out


def budget_series(runner, sources, realization, tolerance=1e-9):
    """ErrorBudget of ``realization`` with each source switched on alone."""
    budget = ErrorBudget()
    for source in sources:
        total = dict.fromkeys(runner.series.repetitions, 0.0)
        for weight, settings in source.terms(realization):
            for n, value in runner.infidelities(settings).items():
                total[n] += weight * value
        for n, value in total.items():
            if value < -tolerance and not source.may_be_negative:
                raise BudgetError('%s came out negative (%.3g at N=%d)'
                                  % (source.name, value, n))
            if value < 0:
                budget.flags.append((source.name, n))
        budget.absolute[source.name] = total
    if budget.flags:
        log.debug('negative contributions: %s', budget.flags)
    return budget


PAULI = {'I': np.eye(2, dtype=complex), 'X': PAULI_X, 'Y': PAULI_Y, 'Z': PAULI_Z}

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# Rotation taking each Pauli eigenbasis onto the Z basis, +1 -> |0>.
_BASIS_CHANGE = {'X': _HADAMARD,
                 'Y': _HADAMARD @ np.diag([1, -1j]),
                 'Z': np.eye(2, dtype=complex)}


def pauli_settings():
    return [a + b for a, b in itertools.product('XYZ', repeat=2)]


def pauli_labels():
    return [a + b for a, b in itertools.product('IXYZ', repeat=2)]


def measure_in_setting(rho4, setting):
    """Ideal outcome probabilities over 00..11 for one Pauli setting."""
    if len(setting) != 2 or any(c not in 'XYZ' for c in setting):
        raise InvalidArgument('bad measurement setting %r' % setting)
    r = np.kron(_BASIS_CHANGE[setting[0]], _BASIS_CHANGE[setting[1]])
    rho = np.asarray(rho4)
    rho = rho / np.trace(rho).real
    return np.clip(np.real(np.diagonal(r @ rho @ r.conj().T)), 0.0, None)


def tomography_linear_inversion(records):
    """Density matrix and 16-entry Pauli vector from Pauli-setting data.

    ``records`` maps each of the 9 settings to outcome counts or
    probabilities over 00..11. Each Pauli expectation averages every
    setting that measures it.
    """
    missing = [s for s in pauli_settings() if s not in records]
    if missing:
        raise InvalidArgument('missing tomography settings: %s' % ', '.join(missing))
    probs = {}
    for s in pauli_settings():
        p = np.asarray(records[s], dtype=float)
        if p.shape != (4,) or p.sum() <= 0:
            raise InvalidArgument('setting %s needs 4 outcome weights' % s)
        probs[s] = p / p.sum()
    outcomes = list(itertools.product((0, 1), repeat=2))
    vector = []
    for label in pauli_labels():
        if label == 'II':
            vector.append(1.0)
            continue
        values = []
        for s, p in probs.items():
            if all(l == 'I' or l == c for l, c in zip(label, s)):
                signs = [(-1) ** sum(b for l, b in zip(label, bits) if l != 'I')
                         for bits in outcomes]
                values.append(float(np.dot(signs, p)))
        vector.append(float(np.mean(values)))
    vector = np.array(vector)
    rho = sum(v * np.kron(PAULI[l[0]], PAULI[l[1]])
              for v, l in zip(vector, pauli_labels())) / 4
    return rho, vector
