"""Pulse synthesis: DRAG microwave envelopes, flattop flux pulses, the
2.4 GHz sample-and-hold of the control electronics, exponential flux
tails and the flux/frequency map of a SQUID-tunable transmon.

Pulse descriptors are small frozen dataclasses; every function in here
is pure and accepts scalar or array times.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal, special

from .hilbert import InvalidArgument


__all__ = ('DomainError', 'DragPulse', 'FlattopPulse', 'DistortionKernel',
           'CalibrationErrors', 'SAMPLE_RATE', 'drag_envelopes',
           'area_seed', 'iq_quadratures', 'iq_waveform', 'SampledWaveform',
           'discretize', 'flattop_shape', 'flattop_frequency',
           'apply_distortion', 'low_pass_filter', 'flux_to_frequency',
           'flux_dispersion', 'frequency_to_flux', 'distort_frequency',
           'sample_window', 'write_waveform_csv')


log = logging.getLogger(__name__)


# Samples per ns of the AWG.
SAMPLE_RATE = 2.4


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class DragPulse:
    amplitude: float
    beta: float
    sigma: float
    duration: float
    omega_d: float
    axis: str = 'X'
    sign: int = 1
    start: float = 0.0
    theta: float = np.pi

    def __post_init__(self):
        if not 0 < self.sigma < self.duration:
            raise InvalidArgument('need 0 < sigma < T')
        if self.axis not in ('X', 'Y'):
            raise InvalidArgument('axis must be X or Y, got %r' % self.axis)
        if self.sign not in (1, -1):
            raise InvalidArgument('sign must be +1 or -1')

    @property
    def mu(self):
        return self.duration / 2

    @property
    def offset(self):
        return self.amplitude * np.exp(-self.mu ** 2 / (2 * self.sigma ** 2))

    @property
    def end(self):
        return self.start + self.duration


@dataclass(frozen=True)
class FlattopPulse:
    amplitude: float
    tau_c: float
    sigma: float = 5.0
    tau_b: float = 2 * np.sqrt(2) * 5.0
    start: float = 0.0

    @property
    def duration(self):
        return self.tau_c + 2 * self.tau_b


@dataclass(frozen=True)
class DistortionKernel:
    """Exponential flux tails as (A per ns, tau in ns) taps."""

    taps: tuple = ()

    def __post_init__(self):
        taps = tuple((float(a), float(tau)) for a, tau in self.taps)
        for a, tau in taps:
            if tau <= 0:
                raise InvalidArgument('tail time constants must be positive')
            if abs(a * tau) >= 0.1:
                raise InvalidArgument('settled tail %r out of range' % (a * tau))
        object.__setattr__(self, 'taps', taps)


@dataclass(frozen=True)
class CalibrationErrors:
    eps_A: float = 0.0           # degrees
    eps_beta: float = 0.0        # relative
    delta_omega: float = 0.0     # rad/ns
    eps_amp_cz: float = 0.0      # rad/ns
    eps_tau_c: float = 0.0       # ns

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if not np.isfinite(getattr(self, name)):
                raise InvalidArgument('%s must be finite' % name)


def drag_envelopes(p, t):
    """Return (s0, s1) at time(s) ``t``; both vanish outside the window."""
    t = np.asarray(t, dtype=float)
    x = t - p.start - p.mu
    inside = (t >= p.start) & (t <= p.end)
    gauss = p.amplitude * np.exp(-x ** 2 / (2 * p.sigma ** 2))
    s0 = np.where(inside, gauss - p.offset, 0.0)
    s1 = np.where(inside, -p.beta * x / p.sigma ** 2 * s0, 0.0)
    return s0, s1


def area_seed(theta, sigma, duration):
    """Amplitude whose offset-corrected Gaussian has area ``theta``."""
    area = (sigma * np.sqrt(2 * np.pi) * special.erf(duration / (2 * np.sqrt(2) * sigma))
            - duration * np.exp(-duration ** 2 / (8 * sigma ** 2)))
    return theta / area


def iq_quadratures(p, errors, t):
    """The two controls (I, Q) with calibration errors applied.

    X pulses drive I with s0 and Q with s1. Y pulses rotate the complex
    drive by a quarter turn, (I, Q) = (-s1, s0), so one beta serves both
    axes.
    """
    errors = errors or CalibrationErrors()
    s0, s1 = drag_envelopes(p, t)
    scale = p.sign * (1 + errors.eps_A / np.degrees(p.theta))
    s0 = scale * s0
    s1 = scale * (1 + errors.eps_beta) * s1
    if p.axis == 'X':
        return s0, s1
    return -s1, s0


def iq_waveform(p, errors, t):
    errors = errors or CalibrationErrors()
    i, q = iq_quadratures(p, errors, t)
    omega_d = p.omega_d - errors.delta_omega
    t = np.asarray(t, dtype=float)
    return i * np.sin(omega_d * t) + q * np.cos(omega_d * t)


class SampledWaveform(object):
    """Zero-order hold of a waveform on the AWG grid."""

    def __init__(self, waveform, rate=SAMPLE_RATE):
        if rate <= 0:
            raise InvalidArgument('sample rate must be positive')
        self.waveform = waveform
        self.rate = rate

    @property
    def step(self):
        return 1.0 / self.rate

    def hold_time(self, t):
        return np.floor(np.asarray(t, dtype=float) * self.rate + 1e-9) / self.rate

    def __call__(self, t):
        return self.waveform(self.hold_time(t))

    def breakpoints(self, t0, t1):
        """Hold edges strictly inside (t0, t1)."""
        k0 = int(np.floor(t0 * self.rate + 1e-9)) + 1
        k1 = int(np.ceil(t1 * self.rate - 1e-9))
        return np.arange(k0, k1) / self.rate


def discretize(waveform, rate=SAMPLE_RATE):
    return SampledWaveform(waveform, rate)


def flattop_shape(t, tau_c, tau_b, sigma):
    """Rectangle on [tau_b, tau_b + tau_c] convolved with a Gaussian."""
    t = np.asarray(t, dtype=float)
    w = np.sqrt(2) * sigma
    return 0.5 * (special.erf((t - tau_b) / w) - special.erf((t - tau_b - tau_c) / w))


def flattop_frequency(p, errors, t):
    """Coupler frequency offset from its idle point at time(s) ``t``."""
    errors = errors or CalibrationErrors()
    tau_c = p.tau_c + errors.eps_tau_c
    t = np.asarray(t, dtype=float) - p.start
    end = tau_c + 2 * p.tau_b
    offset = flattop_shape(0.0, tau_c, p.tau_b, p.sigma)
    value = (p.amplitude + errors.eps_amp_cz) * (
        flattop_shape(t, tau_c, p.tau_b, p.sigma) - offset)
    return np.where((t >= 0) & (t <= end), value, 0.0)


def apply_distortion(samples, dt, kernel):
    """Add causal exponential tails to a uniformly sampled flux train.

    Each tap (A, tau) contributes A * integral x(t') e^{-(t-t')/tau} over
    the past, evaluated exactly for piecewise-constant input, so a unit
    step picks up A tau (1 - e^{-t/tau}). A is per ns.
    """
    x = np.asarray(samples, dtype=float)
    out = x.copy()
    for a, tau in kernel.taps:
        if not a:
            continue
        decay = np.exp(-dt / tau)
        # state[k] = decay * state[k-1] + tau (1 - decay) x[k-1]
        state = signal.lfilter([0.0, tau * (1 - decay)], [1.0, -decay], x)
        out += a * state
    return out


def low_pass_filter(samples, rate=SAMPLE_RATE, cutoff=1.0):
    """Causal single-pole filter, 3 dB down at ``cutoff`` (GHz)."""
    x = np.asarray(samples, dtype=float)
    c = np.cos(2 * np.pi * cutoff / rate)
    b = (2 - c) - np.sqrt((2 - c) ** 2 - 1)
    zi = signal.lfilter_zi([1 - b], [1.0, -b]) * (x[0] if len(x) else 0.0)
    out, _ = signal.lfilter([1 - b], [1.0, -b], x, zi=zi)
    return out


def flux_to_frequency(phi, omega_max, d=0.0):
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(np.pi * phi), np.sin(np.pi * phi)
    return omega_max * (c ** 2 + d ** 2 * s ** 2) ** 0.25


def flux_dispersion(phi, omega_max, d=0.0):
    """d omega / d phi, phi in flux quanta."""
    phi = np.asarray(phi, dtype=float)
    c = np.cos(np.pi * phi)
    if d == 0:
        if np.any(np.abs(c) < 1e-12):
            raise DomainError('dispersion diverges at half a flux quantum')
        s = np.sin(np.pi * phi)
        return -0.5 * np.pi * omega_max * s * np.sign(c) / np.sqrt(np.abs(c))
    h = 1e-6
    return (flux_to_frequency(phi + h, omega_max, d)
            - flux_to_frequency(phi - h, omega_max, d)) / (2 * h)


def frequency_to_flux(omega, omega_max, d=0.0):
    """Inverse of ``flux_to_frequency`` on the branch [0, 1/2)."""
    omega = np.asarray(omega, dtype=float)
    ratio = omega / omega_max
    if np.any(ratio > 1 + 1e-12) or np.any(ratio < np.sqrt(d)):
        raise DomainError('frequency outside the tunable range')
    if d == 0:
        return np.arccos(np.clip(ratio, 0.0, 1.0) ** 2) / np.pi

    def invert(w):
        return optimize.brentq(
            lambda p: flux_to_frequency(p, omega_max, d) - w, 0.0, 0.5, xtol=1e-14)
    return np.vectorize(invert)(omega)


def distort_frequency(omegas, dt, kernel, omega_idle, omega_max, d=0.0):
    """Push a sampled frequency trajectory through the flux-tail filter.

    Frequencies are mapped to flux, the excursion from the idle flux is
    distorted and the result mapped back.
    """
    if not kernel.taps:
        return np.asarray(omegas, dtype=float)
    idle = frequency_to_flux(omega_idle, omega_max, d)
    excursion = frequency_to_flux(np.minimum(omegas, omega_max), omega_max, d) - idle
    return flux_to_frequency(idle + apply_distortion(excursion, dt, kernel), omega_max, d)


def sample_window(waveform, t0, t1, rate=SAMPLE_RATE):
    times = np.arange(int(np.floor((t1 - t0) * rate + 1e-9)) + 1) / rate + t0
    return times, np.asarray(waveform(times), dtype=float)


def write_waveform_csv(filename, times, values):
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['time_ns', 'value'])
        for t, v in zip(times, values):
            writer.writerow(['%.6f' % t, '%.12g' % v])
