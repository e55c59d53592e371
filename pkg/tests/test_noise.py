"""Test the noise generators.
"""

import numpy as np
import pytest
from scipy import linalg

from gatebudget.hilbert import (
    InvalidArgument, TransmonParams, SystemSpec, KB_OVER_HBAR, ghz, mhz,
    sqg_hamiltonian, diagonalize)
from gatebudget.noise import (
    DecoherenceParams, rate_from_us, substream, thermal_ratio, local_t1_jumps,
    dephasing_jump, global_rates, make_rts_ensemble, sample_trajectory,
    sample_trajectories, rts_psd, psd_slope, decay_time, ramsey_envelope,
    build_rts_ensemble, write_psd_csv, RtsEnsemble, MIN_FLUCTUATORS)
from gatebudget.spam import thermal_state


class TestMarkovian(object):

    def test_rates(self):
        assert rate_from_us(None) == 0.0
        assert rate_from_us(np.inf) == 0.0
        assert rate_from_us(35.0) == pytest.approx(1 / 35000.0)
        with pytest.raises(InvalidArgument):
            rate_from_us(-1.0)

    def test_missing_elements_are_off(self):
        d = DecoherenceParams(t1=(35.0,))
        assert d.gamma1(2) == 0.0
        assert d.gamma_phi(0) == 0.0

    def test_thermal_ratio(self):
        assert thermal_ratio(ghz(4.5), 0.0) == 0.0
        assert thermal_ratio(ghz(4.5), 45.0) == pytest.approx(0.00824, abs=5e-5)

    def test_local_jumps_obey_detailed_balance(self):
        (down, _), (up, _) = local_t1_jumps(1e-4, ghz(4.5), 45.0)
        assert down + up == pytest.approx(1e-4)
        assert up / down == pytest.approx(thermal_ratio(ghz(4.5), 45.0))

    def test_dephasing(self):
        rate, op = dephasing_jump(1e-4)
        assert rate == 1e-4
        assert np.allclose(np.diag(op), np.sqrt(2) * np.arange(3))
        with pytest.raises(InvalidArgument):
            dephasing_jump(-1.0)

    def test_global_rates(self):
        p = TransmonParams(ghz(4.5), mhz(-200))
        frame = diagonalize(sqg_hamiltonian(p))
        rates = global_rates(frame, SystemSpec((p,)),
                             DecoherenceParams(t1=(35.0,), teff=45.0)).rates
        e = frame.energies
        kt = KB_OVER_HBAR * 45.0
        assert rates[0, 1] / rates[1, 0] == pytest.approx(np.exp((e[1] - e[0]) / kt))
        assert rates[0, 1] + rates[1, 0] == pytest.approx(1 / 35000.0)
        assert rates[0, 2] == 0.0
        assert np.all(np.diag(rates) == 0)

    def test_steady_state_is_thermal(self):
        p = TransmonParams(ghz(4.5), mhz(-200))
        h = sqg_hamiltonian(p)
        gibbs = np.real(np.diag(thermal_state(h, 45.0)))
        assert gibbs[1] == pytest.approx(0.0082, abs=0.0002)
        rates = global_rates(diagonalize(h), SystemSpec((p,)),
                             DecoherenceParams(t1=(35.0,), teff=45.0))
        generator = rates.rates - np.diag(rates.escape_rates())
        values, vectors = linalg.eig(generator)
        steady = np.real(vectors[:, np.argmin(np.abs(values))])
        steady /= steady.sum()
        fidelity = np.sum(np.sqrt(np.clip(steady, 0, None) * gibbs)) ** 2
        assert 1 - fidelity < 1e-6
        assert steady[1] == pytest.approx(0.0082, abs=0.0002)


class TestTelegraph(object):

    def test_stratified_rates(self):
        ens = make_rts_ensemble(20, 1e-4, 1.0, seed=3)
        edges = np.exp(np.linspace(np.log(1e-4), 0.0, 21))
        assert np.all(ens.gammas >= edges[:-1])
        assert np.all(ens.gammas <= edges[1:])
        again = make_rts_ensemble(20, 1e-4, 1.0, seed=3)
        assert np.array_equal(ens.gammas, again.gammas)
        with pytest.raises(InvalidArgument):
            make_rts_ensemble(20, 1.0, 1e-4)

    def test_needs_twenty_fluctuators(self):
        with pytest.raises(InvalidArgument):
            make_rts_ensemble(19, 1e-4, 1.0)
        with pytest.raises(InvalidArgument):
            RtsEnsemble(np.full(3, 1e-3))
        assert make_rts_ensemble(MIN_FLUCTUATORS, 1e-4, 1.0).count == 20

    def test_trajectory_values(self):
        ens = make_rts_ensemble(20, 1e-3, 1.0, amplitude=0.5)
        x = sample_trajectory(ens, 1000, 0.5, substream(1, 0, 0))
        # sums of twenty +-1 switches
        assert set(np.unique(np.abs(x / 0.5))) <= set(range(0, 21, 2))

    def test_trajectories_reproducible(self):
        ens = make_rts_ensemble(20, 1e-3, 1.0, seed=5)
        a = sample_trajectories(ens, 4, 200, 1.0, stream=2)
        b = sample_trajectories(ens, 2, 200, 1.0, stream=2, first=2)
        assert np.array_equal(a[2:], b)

    def test_spectrum_is_one_over_f(self):
        ens = make_rts_ensemble(40, 1e-5, 1.0)
        freqs = np.logspace(-4, -2, 50)
        slope = psd_slope(freqs, rts_psd(ens, freqs), 1e-4, 1e-2)
        assert abs(slope + 1) < 0.15

    def test_psd_csv(self, tmpdir):
        filename = str(tmpdir.join('psd.csv'))
        write_psd_csv(filename, [1e-3, 2e-3], [1.0, 0.5])
        with open(filename) as f:
            lines = f.read().split()
        assert lines[0] == 'freq_hz,psd'
        assert lines[1].startswith('1000000,')


class TestDephasingCalibration(object):

    def test_decay_time(self):
        times = np.linspace(0, 3, 301)
        assert decay_time(times, np.exp(-times)) == pytest.approx(1.0, abs=1e-4)
        assert decay_time(times, np.ones_like(times)) == np.inf

    def test_ramsey_starts_coherent(self):
        ens = make_rts_ensemble(20, 1e-4, 1.0, amplitude=1e-4)
        env = ramsey_envelope(ens, 1.0, 50, 10.0, n_traj=20)
        assert env[0] == pytest.approx(1.0, abs=1e-2)
        assert np.all(env <= 1 + 1e-12)

    def test_calibrated_ensemble_hits_target(self):
        ens = build_rts_ensemble(15.0, seed=2, count=20, n_traj=200)
        target = 15000.0
        dt = 3 * target / 600
        times = (np.arange(600) + 1) * dt
        env = ramsey_envelope(ens, 1.0, 600, dt, n_traj=200)
        assert decay_time(times, env) == pytest.approx(target, rel=0.1)

    def test_rejects_bad_target(self):
        with pytest.raises(InvalidArgument):
            build_rts_ensemble(0.0)
