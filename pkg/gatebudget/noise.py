"""Dissipative and stochastic noise generators.

Markovian noise is handed out as Lindblad jump lists or as rate matrices
between eigenstates; non-Markovian flux noise as ensembles of random
telegraph fluctuators whose summed spectrum falls off as 1/f.

Trajectory randomness comes from counter-based Philox streams keyed by
(seed, stream, index), so any trajectory can be regenerated on its own.
"""

import csv
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .hilbert import (
    KB_OVER_HBAR, InvalidArgument, annihilation, number, embed,
    hamiltonian_derivative)
from .pulses import flux_dispersion, frequency_to_flux


__all__ = ('CalibrationError', 'DecoherenceParams', 'RateMatrix',
           'RtsEnsemble', 'substream', 'thermal_ratio', 'local_t1_jumps',
           'dephasing_jump', 'global_rates', 'eigen_sensitivities',
           'element_dispersions', 'one_over_f_generator',
           'make_rts_ensemble', 'sample_trajectory', 'sample_trajectories',
           'rts_psd', 'welch_psd', 'psd_slope', 'write_psd_csv',
           'ramsey_envelope', 'echo_envelope', 'decay_time',
           'build_rts_ensemble', 'MIN_FLUCTUATORS')


log = logging.getLogger(__name__)


# smallest telegraph ensemble that still sums to a 1/f spectrum
MIN_FLUCTUATORS = 20


class CalibrationError(Exception):
    pass


def rate_from_us(time_us):
    """1/T in rad/ns for a time in microseconds; None or inf disables."""
    if time_us is None or not np.isfinite(time_us):
        return 0.0
    if time_us <= 0:
        raise InvalidArgument('times must be positive, got %r' % time_us)
    return 1.0 / (1000.0 * time_us)


@dataclass(frozen=True)
class DecoherenceParams:
    """Per-element times in microseconds, effective temperature in mK.

    ``None`` switches a channel off for that element.
    """

    t1: tuple = (None,)
    tphi: tuple = (None,)
    tphi_1f: tuple = (None,)
    teff: float = 0.0

    def gamma1(self, index):
        return rate_from_us(_pick(self.t1, index))

    def gamma_phi(self, index):
        return rate_from_us(_pick(self.tphi, index))


def _pick(values, index):
    return values[index] if index < len(values) else None


def substream(seed, *key):
    """Independent generator for one (stream, index, ...) address."""
    key = tuple(int(k) for k in key)
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(int(seed), spawn_key=key)))


def thermal_ratio(omega, teff):
    """Boltzmann factor exp(-omega / k_B T_eff); zero at zero temperature."""
    if teff <= 0:
        return 0.0
    return float(np.exp(-omega / (KB_OVER_HBAR * teff)))


def local_t1_jumps(gamma1, omega, teff, levels=3):
    ratio = thermal_ratio(omega, teff)
    a = annihilation(levels)
    down = gamma1 / (1 + ratio)
    return [(down, a), (gamma1 - down, a.conj().T)]


def dephasing_jump(gamma_phi, levels=3):
    """Pure dephasing channel; rho01 decays at gamma_phi on top of T1."""
    if gamma_phi < 0:
        raise InvalidArgument('negative dephasing rate')
    return (gamma_phi, np.sqrt(2) * number(levels))


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """rates[a, b] is the transition rate from eigenstate b into a."""

    rates: np.ndarray

    @property
    def dim(self):
        return self.rates.shape[0]

    def jumps(self, vectors=None):
        """Jump list (rate, |a><b|), in the lab basis when ``vectors`` given."""
        out = []
        for a, b in zip(*np.nonzero(self.rates)):
            if vectors is None:
                c = np.zeros((self.dim, self.dim), dtype=complex)
                c[a, b] = 1.0
            else:
                c = np.outer(vectors[:, a], vectors[:, b].conj())
            out.append((self.rates[a, b], c))
        return out

    def escape_rates(self):
        return self.rates.sum(axis=0)


def _thermal_factor(delta, teff, tol):
    # 1 / (1 + e^{-delta/kT}), with delta = e_b - e_a
    if teff <= 0:
        return np.where(np.abs(delta) <= tol, 0.5, (delta > 0).astype(float))
    return special.expit(delta / (KB_OVER_HBAR * teff))


def global_rates(frame, spec, decoherence, tol=1e-9):
    """Transition rates between dressed eigenstates.

    Each element's uncoupled T1 sets the scale of the matrix elements of
    its ladder operators in the eigenbasis; thermal factors enforce
    detailed balance at the effective temperature.
    """
    v = frame.vectors
    e = frame.energies
    delta = e[None, :] - e[:, None]
    factor = _thermal_factor(delta, decoherence.teff, tol)
    down = delta > tol
    up = delta < -tol
    flat = ~(down | up)
    rates = np.zeros((frame.dim, frame.dim))
    for i in range(len(spec.elements)):
        gamma1 = decoherence.gamma1(i)
        if not gamma1:
            continue
        a = embed(annihilation(spec.dims[i]), i, spec.dims)
        lower = np.abs(v.conj().T @ a @ v) ** 2
        raise_ = np.abs(v.conj().T @ a.conj().T @ v) ** 2
        weight = np.where(down, lower, 0.0) + np.where(up, raise_, 0.0) \
            + np.where(flat, lower + raise_, 0.0)
        rates += gamma1 * factor * weight
    np.fill_diagonal(rates, 0.0)
    return RateMatrix(rates)


def eigen_sensitivities(frame, spec, omegas=None, gap=1e-6):
    """d e_a / d omega_i for every element i, shape (elements, dim)."""
    v = frame.vectors
    out = np.empty((len(spec.elements), frame.dim))
    for i in range(len(spec.elements)):
        dh = hamiltonian_derivative(spec, i, omegas)
        out[i] = np.real(np.einsum('ka,kl,la->a', v.conj(), dh, v))
    gaps = np.diff(frame.energies)
    if np.any(gaps < gap):
        warnings.warn('near-degenerate eigenstates, sensitivities averaged '
                      'over degenerate clusters', RuntimeWarning)
        start = 0
        for k in range(1, frame.dim + 1):
            if k == frame.dim or gaps[k - 1] >= gap:
                out[:, start:k] = out[:, start:k].mean(axis=1, keepdims=True)
                start = k
    return out


def element_dispersions(spec, omegas=None):
    """d omega_i / d flux_i; fixed-frequency elements count in rad/ns directly."""
    omegas = spec.omegas if omegas is None else omegas
    out = np.ones(len(spec.elements))
    for i, element in enumerate(spec.elements):
        if element.tunable:
            phi = frequency_to_flux(min(omegas[i], element.omega_max),
                                    element.omega_max, element.asym_d)
            out[i] = flux_dispersion(phi, element.omega_max, element.asym_d)
    return out


def one_over_f_generator(frame, spec, dphi, omegas=None):
    """Diagonal noise Hamiltonian, in the eigenbasis, for flux offsets ``dphi``."""
    sens = eigen_sensitivities(frame, spec, omegas)
    shifts = (np.asarray(dphi) * element_dispersions(spec, omegas)) @ sens
    return np.diag(shifts)


@dataclass(frozen=True, eq=False)
class RtsEnsemble:
    gammas: np.ndarray
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if len(self.gammas) < MIN_FLUCTUATORS:
            raise InvalidArgument('need at least %d fluctuators, got %d'
                                  % (MIN_FLUCTUATORS, len(self.gammas)))

    @property
    def count(self):
        return len(self.gammas)

    def scaled(self, amplitude):
        return RtsEnsemble(self.gammas, amplitude, self.seed)


def make_rts_ensemble(count=40, gamma_min=1e-5, gamma_max=1.0, amplitude=1.0,
                      seed=0):
    """Switching rates stratified over log-spaced bins between the limits."""
    if count < MIN_FLUCTUATORS:
        raise InvalidArgument('need at least %d fluctuators, got %d'
                              % (MIN_FLUCTUATORS, count))
    if not 0 < gamma_min < gamma_max:
        raise InvalidArgument('bad fluctuator band')
    rng = substream(seed, 0)
    edges = np.linspace(np.log(gamma_min), np.log(gamma_max), count + 1)
    u = rng.random(count)
    gammas = np.exp(edges[:-1] + u * np.diff(edges))
    return RtsEnsemble(gammas, amplitude, seed)


def sample_trajectory(ensemble, n_steps, dt, rng):
    """Summed telegraph signal at t_k = k*dt, k < n_steps."""
    total = n_steps * dt
    grid = np.arange(n_steps) * dt
    out = np.zeros(n_steps)
    starts = rng.choice((-1.0, 1.0), size=ensemble.count)
    for gamma, start in zip(ensemble.gammas, starts):
        flips = np.sort(rng.random(rng.poisson(gamma * total)) * total)
        parity = np.searchsorted(flips, grid, side='right') & 1
        out += start * (1 - 2 * parity)
    return ensemble.amplitude * out


def sample_trajectories(ensemble, n_traj, n_steps, dt, stream=0, first=0):
    """Trajectories ``first .. first + n_traj`` of one stream, stacked."""
    return np.stack([
        sample_trajectory(ensemble, n_steps, dt,
                          substream(ensemble.seed, stream, first + k))
        for k in range(n_traj)])


def rts_psd(ensemble, freqs):
    """One-sided Lorentzian-sum spectrum, freqs in GHz."""
    freqs = np.asarray(freqs, dtype=float)
    g = ensemble.gammas[:, None]
    lorentz = 8 * g / (4 * g ** 2 + (2 * np.pi * freqs[None, :]) ** 2)
    return ensemble.amplitude ** 2 * lorentz.sum(axis=0)


def welch_psd(samples, dt, nperseg=None):
    """Welch estimate averaged over trajectories (rows)."""
    samples = np.atleast_2d(samples)
    nperseg = nperseg or min(samples.shape[1], 4096)
    freqs, psd = signal.welch(samples, fs=1.0 / dt, nperseg=nperseg, axis=-1)
    return freqs, psd.mean(axis=0)


def psd_slope(freqs, psd, f_lo, f_hi):
    mask = (freqs >= f_lo) & (freqs <= f_hi) & (psd > 0)
    slope, _ = np.polyfit(np.log(freqs[mask]), np.log(psd[mask]), 1)
    return slope


def write_psd_csv(filename, freqs, psd):
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['freq_hz', 'psd'])
        for fr, p in zip(freqs, psd):
            writer.writerow(['%.9g' % (fr * 1e9), '%.9g' % p])


def _unit_phases(ensemble, n_traj, n_steps, dt, stream):
    unit = ensemble.scaled(1.0)
    x = sample_trajectories(unit, n_traj, n_steps, dt, stream)
    # phase accumulated up to the end of each step
    return np.cumsum(x, axis=1) * dt


def ramsey_envelope(ensemble, dispersion, n_steps, dt, n_traj=500, stream=1):
    """|<e^{i phi(t)}>| at t = (k+1) dt."""
    phases = _unit_phases(ensemble, n_traj, n_steps, dt, stream)
    scale = ensemble.amplitude * dispersion
    return np.abs(np.exp(1j * scale * phases).mean(axis=0))


def echo_envelope(ensemble, dispersion, n_steps, dt, n_traj=500, stream=1):
    """Hahn echo with the refocusing flip at half time, t = 2(m+1) dt."""
    phases = _unit_phases(ensemble, n_traj, n_steps, dt, stream)
    half = n_steps // 2
    echo = 2 * phases[:, :half] - phases[:, 1:2 * half:2]
    scale = ensemble.amplitude * dispersion
    return np.abs(np.exp(1j * scale * echo).mean(axis=0))


def decay_time(times, envelope, level=np.exp(-1)):
    """First crossing of ``level``, linearly interpolated; inf if none."""
    below = np.nonzero(envelope < level)[0]
    if not len(below):
        return np.inf
    k = below[0]
    if k == 0:
        return times[0]
    t0, t1 = times[k - 1], times[k]
    e0, e1 = envelope[k - 1], envelope[k]
    return t0 + (e0 - level) / (e0 - e1) * (t1 - t0)


def build_rts_ensemble(tphi_1f_us, dispersion=1.0, count=40, gamma_min=1e-5,
                       gamma_max=1.0, seed=0, n_traj=500, n_steps=600,
                       bisections=8, tolerance=0.1):
    """Ensemble whose Ramsey envelope crosses 1/e at ``tphi_1f_us``.

    The amplitude is bisected in log space around the quasi-static
    estimate sqrt(2) / (T D sqrt(N_f)).
    """
    if tphi_1f_us <= 0:
        raise InvalidArgument('target dephasing time must be positive')
    target = 1000.0 * tphi_1f_us
    base = make_rts_ensemble(count, gamma_min, gamma_max, 1.0, seed)
    dt = 3 * target / n_steps
    times = (np.arange(n_steps) + 1) * dt
    phases = _unit_phases(base, n_traj, n_steps, dt, stream=1)

    def crossing(amplitude):
        env = np.abs(np.exp(1j * amplitude * dispersion * phases).mean(axis=0))
        return decay_time(times, env)

    a0 = np.sqrt(2) / (target * abs(dispersion) * np.sqrt(count))
    lo, hi = np.log(a0 / 30), np.log(a0 * 30)
    if not crossing(np.exp(lo)) > target > crossing(np.exp(hi)):
        raise CalibrationError('1/f amplitude bracket does not enclose %.3g us'
                               % tphi_1f_us)
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        if crossing(np.exp(mid)) > target:
            lo = mid
        else:
            hi = mid
    amplitude = np.exp(0.5 * (lo + hi))
    reached = crossing(amplitude)
    if abs(reached / target - 1) > tolerance:
        raise CalibrationError('1/f calibration reached %.3g us for target %.3g us'
                               % (reached / 1000, tphi_1f_us))
    log.debug('1/f amplitude %.4g for T_phi %.3g us (D=%.3g)',
              amplitude, tphi_1f_us, dispersion)
    return base.scaled(amplitude)
