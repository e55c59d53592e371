"""Test configuration loading and noise realizations.
"""

import json

import numpy as np
import pytest

from gatebudget.config import (
    ConfigError, DEFAULTS, load_config, sample_realization, mean_realization,
    RunManifest)
from gatebudget.hilbert import SystemSpec, TransmonParams


class TestLoading(object):

    def test_defaults(self):
        config = load_config()
        assert config.gate == 'sqg'
        assert config.repetitions_series == (1, 3, 5, 7, 9)
        assert config.theta == pytest.approx(np.pi)
        assert config.values == DEFAULTS

    def test_document(self, tmpdir):
        filename = tmpdir.join('run.json')
        filename.write(json.dumps({'gate': 'cz', 'seed': 7}))
        config = load_config(str(filename))
        assert config.repetitions_series == (1, 3, 5)
        assert config.seed == 7
        assert config.source == str(filename)

    def test_errors(self, tmpdir):
        with pytest.raises(ConfigError):
            load_config(document={'gates': 'sqg'})
        with pytest.raises(ConfigError):
            load_config(document={'gate': 'iswap'})
        with pytest.raises(ConfigError):
            load_config(document={'theta_deg': 45})
        with pytest.raises(ConfigError):
            load_config(document={'distributions': {'t2_us': [1, 2]}})
        with pytest.raises(ConfigError):
            load_config(document=[1, 2])
        with pytest.raises(ConfigError):
            load_config(document={'rts': {'count': 10}})
        with pytest.raises(ConfigError):
            load_config(document={'rts': {'count': 25.5}})
        broken = tmpdir.join('broken.json')
        broken.write('{')
        with pytest.raises(ConfigError):
            load_config(str(broken))
        with pytest.raises(AttributeError):
            load_config().nonsense

    def test_fluctuator_count(self):
        config = load_config(document={'rts': {'count': 20}})
        assert config.rts['count'] == 20

    def test_override(self):
        config = load_config().override(seed=3, shots=None)
        assert config.seed == 3
        assert config.shots == DEFAULTS['shots']
        assert config.digest() != load_config().digest()


class TestRealizations(object):

    def test_deterministic(self):
        config = load_config()
        a, b = sample_realization(config, 4), sample_realization(config, 4)
        assert a.values == b.values
        assert a.values != sample_realization(config, 5).values
        assert a.seed == 1234 * 1000 + 4

    def test_physical_draws(self):
        config = load_config(document={'distributions': {
            't1_us': [1.0, 10.0], 'p01': [0.0, 0.5]}})
        for index in range(20):
            r = sample_realization(config, index)
            assert r.values['t1_us'] > 0
            assert 0 <= r.values['p01'] <= 1
            assert isinstance(r.system, TransmonParams)
            assert r.system.levels == 3

    def test_cz_realization(self):
        config = load_config(document={'gate': 'cz'})
        r = sample_realization(config, 0)
        assert isinstance(r.system, SystemSpec)
        assert r.system.elements[1].role == 'coupler'
        assert len(r.decoherence.t1) == 3
        assert len(r.readout) == 2
        [(a, tau)] = r.kernel.taps
        assert a * tau == pytest.approx(r.values['tail_amplitude'])
        assert 0 <= a * tau < 0.02
        assert r.to_json()['gate'] == 'cz'

    def test_mean_realization(self):
        r = mean_realization(load_config(document={'gate': 'cz'}))
        assert r.values['tail_tau_ns'] == 300.0
        assert r.values['t1_q1_us'] == 15.0


class TestManifest(object):

    def test_write(self, tmpdir):
        manifest = RunManifest('budget', 'abc', 1234, outputs=['budgets.csv'])
        filename = manifest.write(str(tmpdir))
        with open(filename) as f:
            doc = json.load(f)
        assert doc['command'] == 'budget'
        assert doc['outputs'] == ['budgets.csv']
        assert set(doc['versions']) == {'gatebudget', 'numpy', 'scipy', 'python'}
