"""Split-propagator evolution.

A plan is a list of slices. Each slice carries the gate propagator
U_G of one time step, optionally a dissipative propagator U_D and the
data needed to build the stochastic propagator U_N of a trajectory:
the eigenvectors of the step and the energy shift of every eigenstate
per unit flux offset of every element. One step applies U_D, then U_N,
then U_G.

Superoperators are never formed unless asked for: unitary steps act as
U rho U^dag and the eigenbasis dissipator acts on populations and
coherences separately. ``.superop()`` gives the row-stacked matrix when
needed.
"""

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from .hilbert import InvalidArgument, lindblad_rhs, vectorize, devectorize
from .noise import sample_trajectories


__all__ = ('EvolutionError', 'UnitaryStep', 'SuperopStep',
           'EigenDissipativeStep', 'Slice', 'EvolutionPlan', 'EvolutionResult',
           'propagate_unitary', 'precompute_unitary_steps',
           'precompute_dissipative_steps', 'eigen_dissipative_step',
           'trajectory_noise_step', 'evolve', 'evolve_kets', 'plan_unitaries',
           'oracle_evolve',
           'to_rotating_frame', 'write_diagnostics_csv')


log = logging.getLogger(__name__)


class EvolutionError(Exception):
    def __init__(self, message, step=None):
        Exception.__init__(self, message)
        self.step = step


def _dagger(m):
    return np.swapaxes(m, -1, -2).conj()


class UnitaryStep(object):
    __slots__ = ('unitary',)

    def __init__(self, unitary):
        self.unitary = unitary

    def apply(self, rho):
        return self.unitary @ rho @ self.unitary.conj().T

    def apply_kets(self, psi):
        return psi @ self.unitary.T

    def superop(self):
        return np.kron(self.unitary, self.unitary.conj())


class SuperopStep(object):
    __slots__ = ('matrix',)

    def __init__(self, matrix):
        self.matrix = matrix

    def apply(self, rho):
        return devectorize(vectorize(rho) @ self.matrix.T)

    def superop(self):
        return self.matrix


class EigenDissipativeStep(object):
    """exp(D dt) for jumps |a><b| between eigenstates, exponentiated exactly.

    Populations follow the rate matrix, coherences rho_ab decay at half
    the sum of the escape rates of a and b.
    """

    __slots__ = ('vectors', 'populations', 'coherences')

    def __init__(self, vectors, populations, coherences):
        self.vectors = vectors
        self.populations = populations
        self.coherences = coherences

    def apply(self, rho):
        v = self.vectors
        r = v.conj().T @ rho @ v
        pops = np.real(np.diagonal(r, axis1=-2, axis2=-1))
        r = r * self.coherences
        new = pops @ self.populations.T
        idx = np.arange(v.shape[0])
        r[..., idx, idx] = new
        return v @ r @ v.conj().T

    def superop(self):
        dim = self.vectors.shape[0]
        inner = np.diag(self.coherences.ravel()).astype(complex)
        for a in range(dim):
            for b in range(dim):
                inner[a * dim + a, b * dim + b] = self.populations[a, b]
        v = self.vectors
        return np.kron(v, v.conj()) @ inner @ np.kron(v.conj().T, v.T)


@dataclass
class Slice:
    dt: float
    unitary: UnitaryStep = None
    dissipative: object = None
    # eigenvectors of the step and per-element shifts per unit offset
    vectors: np.ndarray = None
    shifts: np.ndarray = None


@dataclass
class EvolutionPlan:
    slices: list
    n_traj: int = 1
    noise: tuple = ()
    seed: int = 0
    stream: int = 0
    checkpoints: tuple = None
    chunk: int = 50

    def __post_init__(self):
        if self.n_traj < 1:
            raise InvalidArgument('need at least one trajectory')
        if self.checkpoints is None:
            self.checkpoints = (len(self.slices),)
        if self.stochastic:
            dts = {round(s.dt, 12) for s in self.slices}
            if len(dts) != 1:
                raise InvalidArgument('flux noise needs a uniform step')

    @property
    def stochastic(self):
        return any(e is not None for e in self.noise)

    @property
    def dt(self):
        return self.slices[0].dt if self.slices else 0.0

    @property
    def total_time(self):
        return float(sum(s.dt for s in self.slices))

    def checkpoint_times(self):
        ends = np.cumsum([s.dt for s in self.slices])
        return [float(ends[k - 1]) if k else 0.0 for k in self.checkpoints]


@dataclass
class EvolutionResult:
    rho_at: dict
    states: list
    diagnostics: list = field(default_factory=list)


def propagate_unitary(hamiltonian, t0, t1, breakpoints=(), rtol=1e-12, atol=1e-12,
                      t_eval=None):
    """Integrate dU/dt = -i H(t) U from the identity.

    Integration restarts at every breakpoint. Returns U at the sorted
    points of ``t_eval`` (or only at ``t1``).
    """
    dim = hamiltonian(t0).shape[0]
    edges = [t0] + [b for b in sorted(breakpoints) if t0 < b < t1] + [t1]
    t_eval = np.array([t1]) if t_eval is None else np.asarray(t_eval, dtype=float)
    out = np.empty((len(t_eval), dim, dim), dtype=complex)
    out[t_eval <= t0] = np.eye(dim)
    u = np.eye(dim, dtype=complex).ravel()

    def rhs(t, y):
        return (-1j * hamiltonian(t) @ y.reshape(dim, dim)).ravel()

    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        mask = (t_eval > a) & (t_eval <= b)
        ask = np.unique(np.append(t_eval[mask], b))
        sol = integrate.solve_ivp(rhs, (a, b), u, method='DOP853', t_eval=ask,
                                  rtol=rtol, atol=atol)
        if not sol.success:
            raise EvolutionError('unitary integration failed: %s' % sol.message)
        n = int(mask.sum())
        out[mask] = sol.y[:, :n].T.reshape(n, dim, dim)
        u = sol.y[:, -1]
    return out


def precompute_unitary_steps(hamiltonian, times, breakpoints=(), rtol=1e-12,
                             atol=1e-12, piecewise_constant=False):
    """Step propagators U_n from times[n] to times[n+1].

    ``piecewise_constant`` Hamiltonians (constant between breakpoints) are
    exponentiated exactly on each sub-interval; everything else goes
    through one adaptive integration over the whole grid.
    """
    times = np.asarray(times, dtype=float)
    steps = []
    if piecewise_constant:
        cuts = np.asarray(sorted(breakpoints), dtype=float)
        for a, b in zip(times[:-1], times[1:]):
            inner = cuts[(cuts > a + 1e-12) & (cuts < b - 1e-12)]
            u = None
            for x, y in zip(np.r_[a, inner], np.r_[inner, b]):
                piece = linalg.expm(-1j * hamiltonian(0.5 * (x + y)) * (y - x))
                u = piece if u is None else piece @ u
            steps.append(UnitaryStep(u))
        return steps

    us = propagate_unitary(hamiltonian, times[0], times[-1], breakpoints,
                           rtol, atol, t_eval=times)
    for k in range(len(times) - 1):
        u = us[k + 1] @ us[k].conj().T
        err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
        if err > 1e-9:
            raise EvolutionError('step propagator not unitary (%.2g)' % err, step=k)
        steps.append(UnitaryStep(u))
    return steps


def precompute_dissipative_steps(generators, dt):
    """exp(D dt) for each dissipator superoperator, shared when repeated."""
    cache, steps = {}, []
    for gen in generators:
        key = id(gen)
        if key not in cache:
            cache[key] = SuperopStep(linalg.expm(gen * dt))
        steps.append(cache[key])
    return steps


def eigen_dissipative_step(rate_matrix, vectors, dt):
    rates = rate_matrix.rates
    escape = rates.sum(axis=0)
    populations = linalg.expm((rates - np.diag(escape)) * dt)
    coherences = np.exp(-0.5 * (escape[:, None] + escape[None, :]) * dt)
    return EigenDissipativeStep(vectors, populations, coherences)


def trajectory_noise_step(vectors, shifts, dphi, dt):
    """U_N for flux offsets ``dphi`` (shape (..., elements))."""
    energies = np.asarray(dphi) @ shifts
    phases = np.exp(-1j * energies * dt)
    if vectors is None:
        return phases[..., None, :] * np.eye(shifts.shape[-1])
    return (vectors * phases[..., None, :]) @ vectors.conj().T


def _noise_samples(plan, first, count):
    n_steps = len(plan.slices)
    out = np.zeros((count, n_steps, len(plan.noise)))
    for i, ensemble in enumerate(plan.noise):
        if ensemble is None:
            continue
        out[:, :, i] = sample_trajectories(
            ensemble, count, n_steps, plan.dt,
            stream=plan.stream * 16 + i, first=first)
    return out


def _apply_noise(state, s, dphi, kets):
    # dphi: (batch, elements); state: (batch, inputs, ...)
    u = trajectory_noise_step(s.vectors, s.shifts, dphi, s.dt)
    if kets:
        return state @ np.swapaxes(u, -1, -2)
    u = u[:, None]
    return u @ state @ _dagger(u)


def _pairwise_mean(stack):
    def total(lo, hi):
        if hi - lo == 1:
            return stack[lo]
        mid = (lo + hi) // 2
        return total(lo, mid) + total(mid, hi)
    return total(0, len(stack)) / len(stack)


def _check(state, step, kets):
    if not np.all(np.isfinite(state)):
        raise EvolutionError('non-finite state at step %d' % step, step=step)
    if kets:
        trace = np.sum(np.abs(state) ** 2, axis=-1)
    else:
        trace = np.real(np.trace(state, axis1=-2, axis2=-1))
    if np.any(trace > 1 + 1e-6):
        raise EvolutionError('trace blow-up (%.8f) at step %d'
                             % (np.max(trace), step), step=step)


def _run(plan, initial, kets):
    checkpoints = sorted(set(plan.checkpoints))
    collected = {k: [] for k in checkpoints}
    timing = {k: 0.0 for k in checkpoints}
    stochastic = plan.stochastic
    n_traj = plan.n_traj if stochastic else 1
    for first in range(0, n_traj, plan.chunk):
        count = min(plan.chunk, n_traj - first)
        state = np.broadcast_to(initial, (count,) + initial.shape).copy()
        dphi = _noise_samples(plan, first, count) if stochastic else None
        started = time.perf_counter()
        if 0 in collected:
            collected[0].extend(state)
        for k, s in enumerate(plan.slices):
            if s.dissipative is not None:
                state = s.dissipative.apply(state)
            if stochastic and s.shifts is not None:
                state = _apply_noise(state, s, dphi[:, k, :], kets)
            if s.unitary is not None:
                state = s.unitary.apply_kets(state) if kets \
                    else s.unitary.apply(state)
            _check(state, k, kets)
            done = k + 1
            if done in collected:
                collected[done].extend(state)
                timing[done] += time.perf_counter() - started

    times = plan.checkpoint_times()
    order = list(plan.checkpoints)
    rho_at, states, diagnostics = {}, [], []
    for k, t in zip(order, times):
        stack = np.asarray(collected[k])
        if kets:
            stack = stack[..., :, None] * stack[..., None, :].conj()
        rho = _pairwise_mean(stack)
        rho_at[t] = rho
        states.append(rho)
        traces = np.real(np.trace(rho, axis1=-2, axis2=-1))
        herm = 0.5 * (rho + _dagger(rho))
        floor = float(np.min(np.linalg.eigvalsh(herm)))
        diagnostics.append({'time_ns': t,
                            'trace_drift': float(np.max(np.abs(traces - 1))),
                            'min_eigenvalue': floor,
                            'wall_s': timing[k]})
    return EvolutionResult(rho_at, states, diagnostics)


def evolve(plan, rho0):
    """Trajectory-averaged density matrices at the plan checkpoints.

    ``rho0`` is one density matrix or a stack of them; the result keeps
    the stack shape.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    single = rho0.ndim == 2
    initial = rho0[None] if single else rho0
    result = _run(plan, initial, kets=False)
    if single:
        result.states = [s[0] for s in result.states]
        result.rho_at = {t: r[0] for t, r in result.rho_at.items()}
    return result


def evolve_kets(plan, psi0):
    """As ``evolve`` for pure inputs under purely coherent slices."""
    if any(s.dissipative is not None for s in plan.slices):
        raise InvalidArgument('dissipative plans need density matrices')
    psi0 = np.asarray(psi0, dtype=complex)
    single = psi0.ndim == 1
    initial = psi0[None] if single else psi0
    result = _run(plan, initial, kets=True)
    if single:
        result.states = [s[0] for s in result.states]
        result.rho_at = {t: r[0] for t, r in result.rho_at.items()}
    return result


def plan_unitaries(plan):
    """Cumulative propagators at the checkpoints of a coherent plan."""
    if plan.stochastic or any(s.dissipative is not None for s in plan.slices):
        raise InvalidArgument('plan is not purely coherent')
    dim = next(s.unitary.unitary.shape[0] for s in plan.slices
               if s.unitary is not None)
    u = np.eye(dim, dtype=complex)
    wanted = set(plan.checkpoints)
    at = {0: u}
    for k, s in enumerate(plan.slices):
        if s.unitary is not None:
            u = s.unitary.unitary @ u
        if k + 1 in wanted:
            at[k + 1] = u
    return [at[k] for k in plan.checkpoints]


def oracle_evolve(hamiltonian, jumps, rho0, t0, t1, noise=None, tol=1e-10,
                  breakpoints=()):
    """Direct integration of the full master equation.

    ``jumps`` is a jump list or a callable of time returning one;
    ``noise`` an optional callable returning the noise Hamiltonian.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    if dim > 27:
        raise InvalidArgument('oracle limited to 27 levels')

    def rhs(t, y):
        h = hamiltonian(t)
        if noise is not None:
            h = h + noise(t)
        js = jumps(t) if callable(jumps) else jumps
        return lindblad_rhs(h, js, y.reshape(dim, dim)).ravel()

    edges = [t0] + [b for b in sorted(breakpoints) if t0 < b < t1] + [t1]
    y = rho0.ravel()
    for a, b in zip(edges[:-1], edges[1:]):
        sol = integrate.solve_ivp(rhs, (a, b), y, method='DOP853',
                                  rtol=tol, atol=tol * 1e-2)
        if not sol.success:
            raise EvolutionError('oracle integration failed: %s' % sol.message)
        y = sol.y[:, -1]
    return y.reshape(dim, dim)


def to_rotating_frame(rho, energies, t):
    """exp(i E t) rho exp(-i E t) for a diagonal generator E."""
    phase = np.exp(1j * np.asarray(energies) * t)
    return rho * phase[:, None] * phase.conj()[None, :]


def write_diagnostics_csv(result, filename):
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['time_ns', 'trace_drift', 'min_eigenvalue', 'wall_s'])
        for d in result.diagnostics:
            writer.writerow(['%.6f' % d['time_ns'], '%.3e' % d['trace_drift'],
                             '%.3e' % d['min_eigenvalue'], '%.3f' % d['wall_s']])
