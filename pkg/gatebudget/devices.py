"""Gate-level device models.

``SingleQubitModel`` plays DRAG pulses on one transmon in one of three
frames:

    rwa    two levels, rotating frame of the drive
    rwa3   three levels, rotating frame of the drive
    lab    three levels, lab frame, carrier included

``CouplerModel`` plays flattop flux pulses on the coupler of a Q1-C-Q2
system in the lab frame. Both turn a gate sequence plus a ``Settings``
bundle (which noise is switched on) into an ``EvolutionPlan``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .hilbert import (
    InvalidArgument, annihilation, number, sqg_hamiltonian, tqg_hamiltonian,
    diagonalize, dissipator_superop, find_idle_point)
from .noise import (
    DecoherenceParams, local_t1_jumps, dephasing_jump, global_rates,
    eigen_sensitivities, element_dispersions, build_rts_ensemble)
from .propagator import (
    UnitaryStep, Slice, EvolutionPlan, precompute_unitary_steps,
    precompute_dissipative_steps, eigen_dissipative_step, to_rotating_frame)
from .pulses import (
    SAMPLE_RATE, CalibrationErrors, DistortionKernel, DragPulse, FlattopPulse,
    SampledWaveform, iq_quadratures, flattop_frequency, distort_frequency)


__all__ = ('Gate', 'Settings', 'SingleQubitModel', 'CouplerModel',
           'EnsembleCache', 'PAULI_X', 'PAULI_Y', 'PAULI_Z', 'CZ')


log = logging.getLogger(__name__)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass(frozen=True)
class Gate:
    """A single-qubit rotation, or the identity (axis 'I')."""

    axis: str
    theta: float = np.pi
    sign: int = 1

    def __post_init__(self):
        if self.axis not in ('X', 'Y', 'I'):
            raise InvalidArgument('unknown axis %r' % self.axis)

    def inverse(self):
        return Gate(self.axis, self.theta, -self.sign)

    def ideal(self):
        """The rotation the pulse implements in the qubit frame."""
        if self.axis == 'I':
            return np.eye(2, dtype=complex)
        if self.axis == 'X':
            return linalg.expm(0.5j * self.sign * self.theta * PAULI_X)
        return linalg.expm(-0.5j * self.sign * self.theta * PAULI_Y)

    def __str__(self):
        if self.axis == 'I':
            return 'I'
        return '%s%s%d' % ('+' if self.sign > 0 else '-', self.axis,
                           round(np.degrees(self.theta)))


@dataclass(frozen=True)
class Settings:
    """Which imperfections are on for one simulation."""

    frame: str = 'rwa'
    errors: CalibrationErrors = field(default_factory=CalibrationErrors)
    decoherence: DecoherenceParams = field(default_factory=DecoherenceParams)
    one_over_f: tuple = ()
    kernel: DistortionKernel = field(default_factory=DistortionKernel)

    @property
    def stochastic(self):
        return any(t is not None for t in self.one_over_f)

    @property
    def dissipative(self):
        d = self.decoherence
        return any(t is not None for t in tuple(d.t1) + tuple(d.tphi))

    @property
    def coherent(self):
        return not (self.stochastic or self.dissipative)


class EnsembleCache(object):
    """Calibrated RTS ensembles keyed by (element, T_phi, dispersion)."""

    def __init__(self, seed, count=40, gamma_min=1e-5, gamma_max=1.0, n_traj=500):
        self.seed = seed
        self.options = dict(count=count, gamma_min=gamma_min,
                            gamma_max=gamma_max, n_traj=n_traj)
        self.cache = {}

    def get(self, element, tphi_1f_us, dispersion=1.0):
        if tphi_1f_us is None:
            return None
        key = (element, round(tphi_1f_us, 12), round(dispersion, 12))
        if key not in self.cache:
            self.cache[key] = build_rts_ensemble(
                tphi_1f_us, dispersion, seed=self.seed * 8 + element + 1,
                **self.options)
        return self.cache[key]


class SingleQubitModel(object):

    def __init__(self, params, sigma=4.0, duration=16.0, rate=SAMPLE_RATE):
        self.params = params
        self.sigma = sigma
        self.duration = duration
        self.hold = SampledWaveform(None, rate)
        self._steps = {}

    def levels(self, frame):
        return 2 if frame == 'rwa' else 3

    def pulse(self, gate, calibration, start):
        return DragPulse(amplitude=calibration.amplitude, beta=calibration.beta,
                         sigma=self.sigma, duration=self.duration,
                         omega_d=self.params.omega, axis=gate.axis,
                         sign=gate.sign, start=start, theta=gate.theta)

    def computational_basis(self, frame):
        return np.eye(self.levels(frame))[:, :2].astype(complex)

    def hamiltonian(self, pulses, errors, frame):
        """H(t) for a list of pulses; envelopes on the sample-and-hold grid."""
        levels = self.levels(frame)
        a = annihilation(levels)
        n = number(levels)
        alpha = self.params.alpha
        drift = errors.delta_omega * n + 0.5 * alpha * (n @ n - n)
        static = sqg_hamiltonian(
            type(self.params)(omega=self.params.omega, alpha=alpha, levels=levels))
        drive_op = -1j * (a - a.conj().T)
        omega_d = self.params.omega - errors.delta_omega

        def controls(t):
            th = self.hold.hold_time(t)
            i = q = 0.0
            for p in pulses:
                if p.start <= th <= p.end:
                    pi, pq = iq_quadratures(p, errors, th)
                    i, q = i + pi, q + pq
            return float(i), float(q)

        if frame == 'lab':
            def h(t):
                i, q = controls(t)
                return static + (i * np.sin(omega_d * t)
                                 + q * np.cos(omega_d * t)) * drive_op
        else:
            def h(t):
                i, q = controls(t)
                c = 0.5 * (i + 1j * q)
                return drift - c * a - np.conj(c) * a.conj().T
        return h

    def gate_steps(self, gate, calibration, errors, start, dt, frame):
        """Step propagators over one gate window starting at ``start``."""
        n = int(round(self.duration / dt))
        if gate.axis == 'I':
            h = self.hamiltonian([], errors, frame)
            u = UnitaryStep(linalg.expm(-1j * h(start) * dt))
            return [u] * n
        offset = round((start * self.hold.rate) % 1.0, 9)
        key = (gate, calibration, errors, dt, frame, offset)
        if frame != 'lab' and key in self._steps:
            return self._steps[key]
        p = self.pulse(gate, calibration, start)
        h = self.hamiltonian([p], errors, frame)
        times = start + np.arange(n + 1) * dt
        edges = self.hold.breakpoints(start, start + self.duration)
        steps = precompute_unitary_steps(h, times, edges,
                                         piecewise_constant=frame != 'lab')
        if frame != 'lab':
            self._steps[key] = steps
        return steps

    def gate_unitary(self, gate, calibration, errors, start, frame, rtol=1e-12):
        if gate.axis == 'I':
            h = self.hamiltonian([], errors, frame)
            return linalg.expm(-1j * h(start) * self.duration)
        p = self.pulse(gate, calibration, start)
        h = self.hamiltonian([p], errors, frame)
        edges = self.hold.breakpoints(start, start + self.duration)
        [step] = precompute_unitary_steps(
            h, [start, start + self.duration], edges, rtol=rtol, atol=rtol,
            piecewise_constant=frame != 'lab')
        return step.unitary

    def to_qubit_frame(self, rho, t, frame, errors):
        n = np.arange(self.levels(frame), dtype=float)
        if frame == 'lab':
            return to_rotating_frame(rho, self.params.omega * n, t)
        return to_rotating_frame(rho, errors.delta_omega * n, t)

    def dissipator(self, decoherence, frame, dt):
        levels = self.levels(frame)
        jumps = []
        gamma1 = decoherence.gamma1(0)
        if gamma1:
            jumps += local_t1_jumps(gamma1, self.params.omega, decoherence.teff, levels)
        gamma_phi = decoherence.gamma_phi(0)
        if gamma_phi:
            jumps.append(dephasing_jump(gamma_phi, levels))
        if not jumps:
            return None
        [step] = precompute_dissipative_steps([dissipator_superop(jumps)], dt)
        return step

    def plan(self, gates, calibration, settings, dt, checkpoints=None,
             n_traj=1, ensembles=None, seed=0, stream=0, whole_gates=False):
        """Evolution plan for a gate sequence starting at t = 0.

        ``checkpoints`` are gate counts. ``whole_gates`` collapses each
        coherent gate into a single slice.
        """
        frame = settings.frame
        errors = settings.errors
        noise = ()
        shifts = None
        if settings.stochastic:
            if whole_gates:
                raise InvalidArgument('flux noise needs step-resolved gates')
            ensemble = ensembles.get(0, settings.one_over_f[0])
            noise = (ensemble,)
            shifts = np.arange(self.levels(frame), dtype=float)[None, :]
        dissipative = None
        if settings.dissipative:
            if whole_gates:
                raise InvalidArgument('dissipation needs step-resolved gates')
            dissipative = self.dissipator(settings.decoherence, frame, dt)

        slices, per_gate = [], None
        for k, gate in enumerate(gates):
            start = k * self.duration
            if whole_gates:
                u = self.gate_unitary(gate, calibration, errors, start, frame)
                slices.append(Slice(self.duration, UnitaryStep(u)))
                per_gate = 1
                continue
            steps = self.gate_steps(gate, calibration, errors, start, dt, frame)
            per_gate = len(steps)
            slices.extend(Slice(dt, u, dissipative, None, shifts) for u in steps)
        if checkpoints is None:
            checkpoints = (len(gates),)
        return EvolutionPlan(slices, n_traj=n_traj, noise=noise, seed=seed,
                             stream=stream,
                             checkpoints=tuple(c * (per_gate or 0) for c in checkpoints))


class CouplerModel(object):
    """Q1-C-Q2 system driven by flattop pulses on the coupler."""

    def __init__(self, spec, sigma=5.0, tau_b=None, idle=None):
        self.spec = spec
        self.sigma = sigma
        self.tau_b = 2 * np.sqrt(2) * sigma if tau_b is None else tau_b
        self.idle = find_idle_point(spec) if idle is None else idle
        self.frame = diagonalize(self.hamiltonian(self.idle)).labelled(spec)
        self.basis = self.frame.computational_vectors()
        self.h_idle = self.hamiltonian(self.idle)
        log.debug('coupler idles at %.4f GHz, overlaps %s',
                  self.idle / (2 * np.pi), self.frame.overlaps)

    @property
    def coupler(self):
        return self.spec.elements[1]

    def hamiltonian(self, coupler_omega):
        return tqg_hamiltonian(self.spec, coupler_omega)

    def omegas(self, coupler_omega):
        omegas = self.spec.omegas
        omegas[1] = coupler_omega
        return omegas

    def pulse(self, calibration, start=0.0):
        return FlattopPulse(amplitude=calibration.amplitude,
                            tau_c=calibration.tau_c, sigma=self.sigma,
                            tau_b=self.tau_b, start=start)

    def pulse_duration(self, calibration, errors):
        return calibration.tau_c + errors.eps_tau_c + 2 * self.tau_b

    def trajectory(self, pulses, errors):
        def omega_c(t):
            value = self.idle
            for p in pulses:
                value = value + flattop_frequency(p, errors, t)
            return value
        return omega_c

    def flux_steps(self, omega_c, times, breakpoints=()):
        """Step propagators along a coupler trajectory on a sample grid.

        The Hamiltonian is held at its value in the middle of every step
        (and of every piece a breakpoint cuts a step into).
        """
        return precompute_unitary_steps(
            lambda t: self.hamiltonian(float(omega_c(t))), times,
            breakpoints=breakpoints, piecewise_constant=True)

    def gate_unitary(self, calibration, errors=None, dt=0.1):
        errors = errors or CalibrationErrors()
        omega_c = self.trajectory([self.pulse(calibration)], errors)
        duration = self.pulse_duration(calibration, errors)
        n = int(math.ceil(duration / dt - 1e-9))
        u = np.eye(self.spec.total_dim, dtype=complex)
        for step in self.flux_steps(omega_c, np.arange(n + 1) * dt, (duration,)):
            u = step.unitary @ u
        return u

    def qubitized(self, matrix):
        return self.basis.conj().T @ matrix @ self.basis

    def embed_local(self, unitary4):
        """Act with a 4x4 unitary on the dressed computational subspace."""
        v = self.basis
        return np.eye(v.shape[0]) - v @ v.conj().T + v @ unitary4 @ v.conj().T

    def _frames(self, omega_c, times, dt, settings, ensembles):
        """Per-step (vectors, shifts, dissipative step) at step midpoints."""
        out = []
        spec = self.spec
        for t in times:
            w = float(omega_c(t + 0.5 * dt))
            frame = diagonalize(self.hamiltonian(w))
            vectors = shifts = dissipative = None
            if settings.stochastic:
                omegas = self.omegas(w)
                sens = eigen_sensitivities(frame, spec, omegas)
                disp = element_dispersions(spec, omegas)
                vectors = frame.vectors
                shifts = sens * disp[:, None]
            if settings.dissipative:
                rates = global_rates(frame, spec, settings.decoherence)
                vectors = frame.vectors
                dissipative = eigen_dissipative_step(rates, frame.vectors, dt)
            out.append((vectors, shifts, dissipative))
        return out

    def ensembles_for(self, settings, ensembles):
        noise = []
        disp = element_dispersions(self.spec, self.omegas(self.idle))
        for i, tphi in enumerate(settings.one_over_f):
            noise.append(ensembles.get(i, tphi, float(abs(disp[i])))
                         if tphi is not None else None)
        return tuple(noise)

    def plan(self, calibration, n_gates, settings, dt, idle_time=16.0,
             checkpoints=None, n_traj=1, ensembles=None, seed=0, stream=0):
        """Series of ``n_gates`` CZ gates, each followed by ``idle_time``.

        ``checkpoints`` are gate counts; each checkpoint sits at the end
        of the idle that follows the gate.
        """
        errors = settings.errors
        duration = self.pulse_duration(calibration, errors)
        n_gate = int(math.ceil(duration / dt - 1e-9))
        n_idle = int(round(idle_time / dt))
        slot = n_gate + n_idle
        needs_frames = settings.stochastic or settings.dissipative
        noise = self.ensembles_for(settings, ensembles) if settings.stochastic else ()

        def make(steps, frames):
            return [Slice(dt, u, f[2], f[0], f[1]) if f is not None
                    else Slice(dt, u) for u, f in zip(steps, frames)]

        if not settings.kernel.taps:
            omega_c = self.trajectory([self.pulse(calibration)], errors)
            times = np.arange(n_gate + 1) * dt
            gate_steps = self.flux_steps(omega_c, times, (duration,))
            idle_step = UnitaryStep(linalg.expm(-1j * self.h_idle * dt))
            if needs_frames:
                gate_frames = self._frames(omega_c, times[:-1], dt, settings, ensembles)
                idle_frame = self._frames(lambda t: self.idle, [0.0], dt,
                                          settings, ensembles)[0]
            else:
                gate_frames = [None] * n_gate
                idle_frame = None
            slot_slices = make(gate_steps, gate_frames) \
                + make([idle_step] * n_idle, [idle_frame] * n_idle)
            slices = slot_slices * n_gates
        else:
            slices = self._distorted_slices(calibration, n_gates, settings, dt,
                                            slot, needs_frames, ensembles, make)
        if checkpoints is None:
            checkpoints = (n_gates,)
        return EvolutionPlan(slices, n_traj=n_traj, noise=noise, seed=seed,
                             stream=stream,
                             checkpoints=tuple(c * slot for c in checkpoints))

    def _distorted_slices(self, calibration, n_gates, settings, dt, slot,
                          needs_frames, ensembles, make):
        errors = settings.errors
        pulses = [self.pulse(calibration, start=k * slot * dt)
                  for k in range(n_gates)]
        nominal = self.trajectory(pulses, errors)
        grid = np.arange(n_gates * slot + 1) * dt
        samples = np.array([float(nominal(t)) for t in grid])
        coupler = self.coupler
        distorted = distort_frequency(samples, dt, settings.kernel, self.idle,
                                      coupler.omega_max, coupler.asym_d)
        tail = distorted - samples

        def omega_c(t):
            return nominal(t) + np.interp(t, grid, tail)

        steps = self.flux_steps(omega_c, grid)
        if needs_frames:
            frames = self._frames(omega_c, grid[:-1], dt, settings, ensembles)
        else:
            frames = [None] * len(steps)
        return make(steps, frames)
