"""Run configuration, parameter distributions and noise realizations.

The configuration is one JSON document; every key is optional. A noise
realization is one seeded draw of every device and noise parameter.
"""

import hashlib
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from os import path

import numpy as np
import scipy

from .hilbert import TransmonParams, SystemSpec, ghz, mhz
from .noise import DecoherenceParams, MIN_FLUCTUATORS, substream
from .pulses import CalibrationErrors, DistortionKernel


__all__ = ('ConfigError', 'DEFAULTS', 'SQG_DISTRIBUTIONS', 'CZ_DISTRIBUTIONS',
           'READOUT_DISTRIBUTIONS', 'Config', 'load_config',
           'NoiseRealization', 'sample_realization', 'mean_realization',
           'RunManifest')


log = logging.getLogger(__name__)


class ConfigError(Exception):
    pass


DEFAULTS = {
    'gate': 'sqg',
    'theta_deg': 180,
    'series': None,
    'realizations': 40,
    'trajectories': 200,
    'shots': 2000,
    'dataset_size': 150,
    'restarts': 20,
    'components': 3,
    'seed': 1234,
    'n_states': 20,
    'dt_drive': 0.02,
    'dt_rwa': 0.1,
    'dt_flux': 0.1,
    'system': None,
    'distributions': {},
    'rts': {'count': 40, 'gamma_min_per_us': 0.01, 'gamma_max_per_us': 1000.0},
    'circuits': {},
    'repetitions': 25,
}

SERIES = {'sqg': (1, 3, 5, 7, 9), 'cz': (1, 3, 5)}

# (mean, std) of Gaussian draws; ('uniform', lo, hi) otherwise
SQG_DISTRIBUTIONS = {
    'omega_ghz': (4.5, 0.05),
    'alpha_mhz': (-200.0, 7.5),
    't1_us': (35.0, 7.0),
    'tphi_us': (65.0, 7.5),
    'eps_a_deg': (0.0, 0.5),
    'eps_beta': (0.0, 0.02),
    'delta_omega_khz': (0.0, 10.0),
    'tphi_1f_us': (15.0, 2.5),
    'teff_mk': (45.0, 5.0),
}

CZ_DISTRIBUTIONS = {
    'omega_q1_ghz': (4.12, 0.0),
    'omega_q2_ghz': (4.30, 0.0),
    'alpha_q1_mhz': (-194.0, 10.0),
    'alpha_c_mhz': (-100.0, 5.0),
    'alpha_q2_mhz': (-187.0, 10.0),
    'beta_qc': (15e-3, 0.75e-3),
    'beta_q1q2': (1e-3, 0.05e-3),
    'omega_c_max_ghz': (6.9, 0.15),
    't1_q1_us': (15.0, 5.0),
    't1_c_us': (15.0, 5.0),
    't1_q2_us': (15.0, 5.0),
    'tphi_1f_q1_us': (15.0, 5.0),
    'tphi_1f_c_us': (1.5, 0.3),
    'tphi_1f_q2_us': (15.0, 5.0),
    'eps_amp_ghz': (0.0, 0.02),
    'eps_tau_c_ns': (0.0, 0.2),
    'tail_amplitude': ('uniform', 0.0, 0.02),
    'tail_tau_ns': ('uniform', 100.0, 500.0),
    'teff_mk': (45.0, 5.0),
}

READOUT_DISTRIBUTIONS = {
    'p01': (0.025, 0.008),
    'p10': (0.010, 0.005),
}


def _physical(name, value):
    if name.startswith(('t1', 'tphi', 'teff', 'omega', 'beta', 'tail_tau')):
        return value > 0
    if name.startswith('alpha'):
        return value < 0
    if name.startswith(('p01', 'p10', 'p0', 'p1')):
        return 0 <= value <= 1
    if name == 'tail_amplitude':
        return 0 <= value < 0.1
    return True


@dataclass
class Config:
    """Configuration document merged over the defaults."""

    values: dict = field(default_factory=lambda: dict(DEFAULTS))
    source: str = None

    def __getattr__(self, name):
        try:
            return self.__dict__['values'][name]
        except KeyError:
            raise AttributeError(name)

    @property
    def repetitions_series(self):
        return tuple(self.values['series'] or SERIES[self.gate])

    @property
    def theta(self):
        return np.radians(self.values['theta_deg'])

    def distributions(self):
        base = dict(SQG_DISTRIBUTIONS if self.gate == 'sqg' else CZ_DISTRIBUTIONS)
        base.update(READOUT_DISTRIBUTIONS)
        for name, value in self.values['distributions'].items():
            if name not in base:
                raise ConfigError('unknown distribution parameter "%s"' % name)
            base[name] = tuple(value)
        return base

    def override(self, **options):
        """Command line values that are not None replace document values."""
        for name, value in options.items():
            if value is not None:
                self.values[name] = value
        return self

    def digest(self):
        doc = json.dumps(self.values, sort_keys=True, default=str)
        return hashlib.sha256(doc.encode('utf8')).hexdigest()


def load_config(filename=None, document=None):
    if filename is not None:
        try:
            with open(filename) as f:
                document = json.load(f)
        except (IOError, ValueError) as e:
            raise ConfigError('cannot read %s: %s' % (filename, e))
    document = document or {}
    if not isinstance(document, dict):
        raise ConfigError('configuration must be a JSON object')
    unknown = sorted(set(document) - set(DEFAULTS))
    if unknown:
        raise ConfigError('unknown configuration keys: %s' % ', '.join(unknown))
    values = dict(DEFAULTS)
    values.update(document)
    if values['gate'] not in ('sqg', 'cz'):
        raise ConfigError('gate must be "sqg" or "cz", got %r' % values['gate'])
    if values['theta_deg'] not in (90, 180):
        raise ConfigError('theta_deg must be 90 or 180')
    if not isinstance(values['rts'], dict):
        raise ConfigError('rts must be a JSON object')
    count = values['rts'].get('count', MIN_FLUCTUATORS)
    if not isinstance(count, int) or count < MIN_FLUCTUATORS:
        raise ConfigError('rts.count must be an integer >= %d, got %r'
                          % (MIN_FLUCTUATORS, count))
    config = Config(values, filename)
    config.distributions()
    return config


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    gate: str
    index: int
    seed: int
    system: object
    decoherence: DecoherenceParams
    errors: CalibrationErrors
    kernel: DistortionKernel = field(default_factory=DistortionKernel)
    readout: tuple = ()
    values: dict = field(default_factory=dict)

    def to_json(self):
        return {'gate': self.gate, 'index': self.index, 'seed': self.seed,
                'system': self.system.to_json(), 'values': self.values}


def _draw(rng, name, spec, max_tries=1000):
    if spec[0] == 'uniform':
        return float(rng.uniform(spec[1], spec[2]))
    mean, std = spec
    for _ in range(max_tries):
        value = float(rng.normal(mean, std)) if std else float(mean)
        if _physical(name, value):
            return value
    raise ConfigError('could not draw a physical value for %s' % name)


def _build(config, index, seed, values):
    gate = config.gate
    readout = ((values['p01'], values['p10']),) * (1 if gate == 'sqg' else 2)
    if gate == 'sqg':
        system = TransmonParams(omega=ghz(values['omega_ghz']),
                                alpha=mhz(values['alpha_mhz']), levels=3)
        if config.system:
            system = SystemSpec.from_json(config.system).elements[0]
        decoherence = DecoherenceParams(
            t1=(values['t1_us'],), tphi=(values['tphi_us'],),
            tphi_1f=(values['tphi_1f_us'],), teff=values['teff_mk'])
        errors = CalibrationErrors(
            eps_A=values['eps_a_deg'], eps_beta=values['eps_beta'],
            delta_omega=2 * np.pi * values['delta_omega_khz'] * 1e-6)
        kernel = DistortionKernel()
    else:
        if config.system:
            system = SystemSpec.from_json(config.system)
        else:
            w_max = ghz(values['omega_c_max_ghz'])
            elements = (
                TransmonParams(ghz(values['omega_q1_ghz']), mhz(values['alpha_q1_mhz'])),
                TransmonParams(w_max, mhz(values['alpha_c_mhz']), omega_max=w_max,
                               role='coupler'),
                TransmonParams(ghz(values['omega_q2_ghz']), mhz(values['alpha_q2_mhz'])))
            qc, qq = values['beta_qc'], values['beta_q1q2']
            system = SystemSpec(elements, [[0, qc, qq], [qc, 0, qc], [qq, qc, 0]])
        decoherence = DecoherenceParams(
            t1=(values['t1_q1_us'], values['t1_c_us'], values['t1_q2_us']),
            tphi=(None, None, None),
            tphi_1f=(values['tphi_1f_q1_us'], values['tphi_1f_c_us'],
                     values['tphi_1f_q2_us']),
            teff=values['teff_mk'])
        errors = CalibrationErrors(eps_amp_cz=ghz(values['eps_amp_ghz']),
                                   eps_tau_c=values['eps_tau_c_ns'])
        # tail_amplitude is the settled step response; taps are per ns
        tau = values['tail_tau_ns']
        kernel = DistortionKernel(((values['tail_amplitude'] / tau, tau),))
    return NoiseRealization(gate, index, seed, system, decoherence, errors,
                            kernel, readout, values)


def sample_realization(config, index):
    """Realization ``index`` of the configured gate; seeded per index."""
    seed = int(config.seed)
    rng = substream(seed, 17, index)
    values = {name: _draw(rng, name, spec)
              for name, spec in sorted(config.distributions().items())}
    return _build(config, index, seed * 1000 + index, values)


def mean_realization(config):
    """Every parameter at its mean (uniforms at their midpoint)."""
    values = {}
    for name, spec in config.distributions().items():
        values[name] = 0.5 * (spec[1] + spec[2]) if spec[0] == 'uniform' \
            else float(spec[0])
    return _build(config, 0, int(config.seed), values)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    versions: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.versions:
            from . import __version__
            self.versions = {'gatebudget': '.'.join(__version__),
                             'numpy': np.__version__,
                             'scipy': scipy.__version__,
                             'python': platform.python_version()}

    def timed(self, name, started):
        self.timings[name] = round(time.perf_counter() - started, 3)

    def to_json(self):
        return {'command': self.command, 'config_hash': self.config_hash,
                'seed': self.seed, 'outputs': self.outputs,
                'timings': self.timings, 'failures': self.failures,
                'versions': self.versions}

    def write(self, directory, name='manifest.json'):
        filename = path.join(directory, name)
        with open(filename, 'w') as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
        return filename
