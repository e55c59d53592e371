#!/usr/bin/env python

import argparse
import csv
import json
import logging
import os
import sys
import time
from os import path

import numpy as np
from scipy import linalg
from tqdm import tqdm

from .budgets import (
    CalibrationFailed, BudgetError, CalibratedGate, GateSeriesSpec, BudgetRunner,
    budget_series, calibrate_drag, calibrate_cz, state_set)
from .config import (
    ConfigError, load_config, sample_realization, RunManifest)
from .devices import Gate, SingleQubitModel, CouplerModel, EnsembleCache, Settings
from .experiments import sqg_suite, tqg_suite, simulate_record, SQG_TEMPLATES
from .gpr import (
    FitError, BudgetDataset, GprModel, fit, predict, column_scores,
    weighted_r2, split_dataset)
from .hilbert import (
    TransmonParams, SystemSpec, ghz, mhz, sqg_hamiltonian, diagonalize,
    dissipator_superop)
from .noise import (
    CalibrationError, DecoherenceParams, global_rates, local_t1_jumps,
    dephasing_jump, make_rts_ensemble, sample_trajectories, welch_psd,
    psd_slope, build_rts_ensemble, ramsey_envelope, echo_envelope, decay_time,
    substream)
from .propagator import (
    EvolutionError, EvolutionPlan, Slice, SuperopStep, evolve, oracle_evolve)
from .pulses import area_seed
from .sources import sources_for, source_names
from .spam import MeasurementError, thermal_state, write_counts_csv


log = logging.getLogger(__name__)


# Failures that cost one realization, not the run.
REALIZATION_ERRORS = (CalibrationFailed, CalibrationError, EvolutionError,
                      MeasurementError, BudgetError)


def target_name(source, n):
    return '%s@N%d' % (source, n)


def split_target(name):
    source, n = name.rsplit('@N', 1)
    return source, int(n)


def series_spec(config):
    return GateSeriesSpec(config.gate, config.repetitions_series,
                          theta=config.theta)


def ensembles(config, seed):
    rts = config.rts
    return EnsembleCache(seed, count=rts.get('count', 40),
                         gamma_min=rts.get('gamma_min_per_us', 0.01) / 1000,
                         gamma_max=rts.get('gamma_max_per_us', 1000.0) / 1000)


def prepare_device(config, realization, frames=('rwa', 'lab')):
    """Device model and per-frame calibrations of one realization."""
    if config.gate == 'sqg':
        device = SingleQubitModel(realization.system)
        calibrations = {frame: calibrate_drag(device, config.theta, 'X', frame)
                        for frame in frames}
    else:
        device = CouplerModel(realization.system)
        calibrations = {'lab': calibrate_cz(device, dt=config.dt_flux)}
    return device, calibrations


def realization_budget(config, realization, device, calibrations, cache):
    n_qubits = 1 if config.gate == 'sqg' else 2
    states = state_set(n_qubits, config.n_states, realization.seed)
    runner = BudgetRunner(device, calibrations, series_spec(config), states,
                          n_traj=config.trajectories, seed=realization.seed,
                          ensembles=cache,
                          dt={'rwa': config.dt_rwa, 'rwa3': config.dt_rwa,
                              'lab': config.dt_drive, 'flux': config.dt_flux})
    return budget_series(runner, sources_for(config.gate), realization)


def cmd_budget(config, out):
    manifest = RunManifest('budget', config.digest(), config.seed)
    rows, relative = [], {}
    for index in tqdm(range(config.realizations), desc='realizations'):
        started = time.perf_counter()
        realization = sample_realization(config, index)
        try:
            device, calibrations = prepare_device(config, realization)
            budget = realization_budget(config, realization, device,
                                        calibrations,
                                        ensembles(config, realization.seed))
        except REALIZATION_ERRORS as e:
            log.warning('realization %d skipped: %s', index, e)
            manifest.failures.append({'realization': index, 'error': str(e)})
            continue
        manifest.timed('realization_%d' % index, started)
        log.info('realization %d done', index)
        for source, n, a, r in budget.rows():
            rows.append((index, source, n, a, r))
            relative.setdefault((source, n), []).append(r)

    filename = path.join(out, 'budgets.csv')
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['realization', 'source', 'N', 'absolute', 'relative'])
        for index, source, n, a, r in rows:
            writer.writerow([index, source, n, '%.9e' % a, '%.9e' % r])
    manifest.outputs.append(filename)

    filename = path.join(out, 'summary.csv')
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['source', 'N', 'median', 'p5', 'p95', 'count'])
        for (source, n), values in relative.items():
            p5, median, p95 = np.percentile(values, [5, 50, 95])
            writer.writerow([source, n, '%.6e' % median, '%.6e' % p5,
                             '%.6e' % p95, len(values)])
    manifest.outputs.append(filename)
    log.info('wrote %s', manifest.write(out))
    return 0


def make_suite(config):
    if config.gate == 'sqg':
        templates = config.circuits.get('sqg') or SQG_TEMPLATES
        return sqg_suite(config.theta, config.repetitions, config.shots,
                         tuple(templates))
    return tqg_suite(shots=config.shots)


def cmd_generate_dataset(config, out):
    manifest = RunManifest('generate-dataset', config.digest(), config.seed)
    suite = make_suite(config)
    targets = [target_name(s, n) for s in source_names(config.gate)
               for n in config.repetitions_series]
    filename = path.join(out, 'dataset.csv')
    if path.exists(filename):
        dataset = BudgetDataset.read_csv(filename)
        if dataset.feature_names != suite.feature_names \
                or dataset.target_names != targets:
            raise ConfigError('%s was written by a different configuration'
                              % filename)
        log.info('resuming with %d rows', len(dataset))
    else:
        dataset = BudgetDataset(suite.feature_names, targets)
    counts_dir = path.join(out, 'counts')
    if not path.isdir(counts_dir):
        os.makedirs(counts_dir)
    done = set(dataset.realizations)
    frames = ('rwa', 'lab', 'rwa3')
    for index in tqdm(range(config.dataset_size), desc='realizations'):
        if index in done:
            continue
        started = time.perf_counter()
        realization = sample_realization(config, index)
        cache = ensembles(config, realization.seed)
        try:
            device, calibrations = prepare_device(config, realization, frames)
            record = simulate_record(suite, device, calibrations, realization,
                                     config.trajectories, cache)
            budget = realization_budget(config, realization, device,
                                        calibrations, cache)
        except REALIZATION_ERRORS as e:
            log.warning('realization %d skipped: %s', index, e)
            manifest.failures.append({'realization': index, 'error': str(e)})
            continue
        dataset.append(index, record.features,
                       [budget.absolute[s][n] for s, n in map(split_target, targets)])
        dataset.write_csv(filename)
        write_counts_csv(path.join(counts_dir, 'realization_%04d.csv' % index),
                         record.counts)
        manifest.timed('realization_%d' % index, started)
        log.info('realization %d done', index)
    manifest.outputs += [filename, counts_dir]
    log.info('wrote %s', manifest.write(out))
    return 0


def cmd_train(config, out, dataset_file, shuffle_labels=False,
              literal_r2=False, min_rows=50):
    manifest = RunManifest('train', config.digest(), config.seed)
    dataset = BudgetDataset.read_csv(dataset_file)
    if len(dataset) < min_rows:
        raise ConfigError('dataset has %d rows, training needs %d'
                          % (len(dataset), min_rows))
    train, test = split_dataset(len(dataset), 0.9, config.seed)
    x, y = dataset.features, dataset.targets.copy()
    if shuffle_labels:
        y[train] = y[substream(config.seed, 19).permutation(train)]
        log.info('training on shuffled labels')

    models = {}
    pred = np.full((len(test), y.shape[1]), np.nan)
    for j, name in enumerate(tqdm(dataset.target_names, desc='targets')):
        try:
            model = fit(x[train], y[train, j], config.components,
                        config.restarts, config.seed + j)
        except FitError as e:
            log.warning('%s: %s', name, e)
            manifest.failures.append({'target': name, 'error': str(e)})
            continue
        models[name] = dict(model.to_json(), target_std=float(np.std(y[train, j])))
        pred[:, j] = predict(model, x[test])[0]
        log.debug('%s fitted, lml %.4g', name, model.lml)

    fitted = [j for j, name in enumerate(dataset.target_names) if name in models]
    if not fitted:
        log.error('no target could be fitted')
        manifest.write(out)
        return 2
    scores, variances = column_scores(pred[:, fitted], y[test][:, fitted],
                                      literal_r2)
    weighted = weighted_r2(scores, variances)
    log.info('variance-weighted R2 on %d test rows: %.4f', len(test), weighted)

    filename = path.join(out, 'models.json')
    with open(filename, 'w') as f:
        json.dump({'feature_names': dataset.feature_names, 'models': models},
                  f, sort_keys=True)
    manifest.outputs.append(filename)
    filename = path.join(out, 'r2.csv')
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['target', 'r2', 'variance'])
        for j, s, v in zip(fitted, scores, variances):
            writer.writerow([dataset.target_names[j], '%.6f' % s, '%.6e' % v])
        writer.writerow(['weighted', '%.6f' % weighted, ''])
    manifest.outputs.append(filename)
    log.info('wrote %s', manifest.write(out))
    return 0


def cmd_reconstruct(config, out, models_file, record_file):
    with open(models_file) as f:
        doc = json.load(f)
    record = BudgetDataset.read_csv(record_file)
    if record.feature_names != doc['feature_names']:
        raise ConfigError('record columns do not match the trained features')
    filename = path.join(out, 'predictions.csv')
    violations = 0
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['realization', 'source', 'N', 'mean', 'stddev',
                         'violation'])
        for name, entry in doc['models'].items():
            model = GprModel.from_json(entry)
            mean, var = predict(model, record.features)
            std = np.sqrt(var)
            source, n = split_target(name)
            for r, m, s in zip(record.realizations, mean, std):
                flag = bool(s > 2 * entry['target_std'])
                violations += flag
                writer.writerow([r, source, n, '%.9e' % m, '%.9e' % s, int(flag)])
    if violations:
        log.warning('%d predictions outside the training distribution', violations)
    manifest = RunManifest('reconstruct', config.digest(), config.seed,
                           outputs=[filename])
    log.info('wrote %s', manifest.write(out))
    return 0


def _check(results, name, measured, passed, expected):
    results.append((name, bool(passed), measured, expected))
    log.info('%s %s: %s (expected %s)', 'ok' if passed else 'FAILED', name,
             measured, expected)


def _relaxation_checks(results):
    # Idling qutrit, T1 = 35 us and T_phi = 65 us, coarse exact steps.
    omega, alpha = ghz(4.5), mhz(-200)
    gamma1, gamma_phi = 1 / 35e3, 1 / 65e3
    jumps = local_t1_jumps(gamma1, omega, 0.0) + [dephasing_jump(gamma_phi)]
    step = SuperopStep(linalg.expm(dissipator_superop(jumps) * 200.0))
    plan = EvolutionPlan([Slice(200.0, None, step)] * 350,
                         checkpoints=tuple(range(5, 351, 5)))
    times = np.array(plan.checkpoint_times())
    plus = np.zeros((3, 3), dtype=complex)
    plus[:2, :2] = 0.5
    excited = np.diag([0, 1, 0]).astype(complex)
    pops = [r[1, 1].real for r in evolve(plan, excited).states]
    t1 = -1 / np.polyfit(times, np.log(pops), 1)[0] / 1e3
    _check(results, 'T1 fit', '%.3f us' % t1, abs(t1 / 35 - 1) < 0.01, '35 us +-1%')
    coh = [2 * abs(r[0, 1]) for r in evolve(plan, plus).states]
    t2 = -1 / np.polyfit(times, np.log(coh), 1)[0] / 1e3
    expected = 1 / (1 / 70 + 1 / 65)
    _check(results, 'T2 fit', '%.3f us' % t2, abs(t2 / expected - 1) < 0.02,
           '%.2f us +-2%%' % expected)


def _thermal_checks(results):
    params = TransmonParams(ghz(4.5), mhz(-200))
    h = sqg_hamiltonian(params)
    gibbs = thermal_state(h, 45.0)
    _check(results, 'thermal excited population', '%.4f%%' % (100 * gibbs[1, 1].real),
           abs(gibbs[1, 1].real - 0.0082) < 0.0002, '0.82% +-0.02%')
    frame = diagonalize(h)
    rates = global_rates(frame, SystemSpec((params,)),
                         DecoherenceParams(t1=(35.0,), teff=45.0))
    generator = rates.rates - np.diag(rates.escape_rates())
    values, vectors = linalg.eig(generator)
    steady = np.real(vectors[:, np.argmin(np.abs(values))])
    steady /= steady.sum()
    fidelity = np.sum(np.sqrt(steady * np.real(np.diag(gibbs)))) ** 2
    _check(results, 'steady state vs Gibbs', '1-F=%.2e' % (1 - fidelity),
           1 - fidelity < 1e-6, '< 1e-6')


def _flux_noise_checks(results, seed):
    ensemble = make_rts_ensemble(40, 1e-5, 1.0, 1.0, seed)
    samples = sample_trajectories(ensemble, 20, 2 ** 16, 1.0)
    freqs, psd = welch_psd(samples, 1.0, nperseg=2 ** 14)
    slope = psd_slope(freqs, psd, 1e-4, 1e-2)
    _check(results, 'RTS PSD slope', '%.3f' % slope, abs(slope + 1) <= 0.15,
           '-1 +-0.15')
    target = 15.0
    calibrated = build_rts_ensemble(target, seed=seed)
    dt = 3 * target * 1000 / 600
    times = (np.arange(600) + 1) * dt
    ramsey = decay_time(times, ramsey_envelope(calibrated, 1.0, 600, dt, stream=3))
    _check(results, 'Ramsey 1/e time', '%.2f us' % (ramsey / 1000),
           abs(ramsey / 1000 / target - 1) < 0.1, '%.1f us +-10%%' % target)
    echo_times = 2 * (np.arange(300) + 1) * dt
    echo = decay_time(echo_times, echo_envelope(calibrated, 1.0, 600, dt, stream=3))
    _check(results, 'echo outlives Ramsey', '%.2f us' % (echo / 1000),
           echo > ramsey, '> %.2f us' % (ramsey / 1000))


def _splitting_checks(results):
    params = TransmonParams(ghz(4.5), mhz(-200))
    model = SingleQubitModel(params)
    cal = CalibratedGate('drag', area_seed(np.pi, 4.0, 16.0), 0.5 / abs(params.alpha))
    decoherence = DecoherenceParams(t1=(35.0,), tphi=(65.0,))
    settings = Settings(frame='lab', decoherence=decoherence)
    rho0 = np.diag([1, 0, 0]).astype(complex)
    gate = Gate('X')
    pulse = model.pulse(gate, cal, 0.0)
    h = model.hamiltonian([pulse], settings.errors, 'lab')
    jumps = local_t1_jumps(decoherence.gamma1(0), params.omega, 0.0) \
        + [dephasing_jump(decoherence.gamma_phi(0))]
    exact = oracle_evolve(h, jumps, rho0, 0.0, 16.0,
                          breakpoints=model.hold.breakpoints(0.0, 16.0))
    deviations = []
    for dt in (0.02, 0.01):
        plan = model.plan([gate], cal, settings, dt)
        rho = evolve(plan, rho0).states[-1]
        deviations.append(float(np.linalg.norm(rho - exact)))
    _check(results, 'splitting vs oracle', '%.2e' % deviations[0],
           deviations[0] < 1e-6, '< 1e-6 at dt=0.02 ns')
    ratio = deviations[1] / deviations[0]
    _check(results, 'first-order convergence', '%.3f' % ratio,
           abs(ratio - 0.5) <= 0.1, '0.5 +-20%')


def cmd_validate(config, out):
    results = []
    _thermal_checks(results)
    _relaxation_checks(results)
    _flux_noise_checks(results, config.seed)
    _splitting_checks(results)
    filename = path.join(out, 'validation.csv')
    with open(filename, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['check', 'passed', 'measured', 'expected'])
        for name, passed, measured, expected in results:
            writer.writerow([name, int(passed), measured, expected])
    manifest = RunManifest('validate', config.digest(), config.seed,
                           outputs=[filename])
    failed = [r[0] for r in results if not r[1]]
    manifest.failures = failed
    manifest.write(out)
    if failed:
        log.error('failed checks: %s', ', '.join(failed))
        return 2
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog='gatebudget',
        description='Error budgets of superconducting gates and their '
                    'reconstruction from measurement records.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Log debug output.')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON configuration document.')
    common.add_argument('--seed', type=int)
    common.add_argument('--out', default='.', help='Output directory.')
    common.add_argument('--realizations', type=int)
    common.add_argument('--trajectories', type=int)
    common.add_argument('--shots', type=int)
    common.add_argument('--restarts', type=int)

    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True
    commands.add_parser('budget', parents=[common],
                        help='Per-source budgets over sampled realizations.')
    commands.add_parser('generate-dataset', parents=[common],
                        help='Measurement records with their budgets.')
    train = commands.add_parser('train', parents=[common],
                                help='Fit one regressor per budget column.')
    train.add_argument('dataset', help='dataset.csv from generate-dataset')
    train.add_argument('--shuffle-labels', action='store_true',
                       help='Permute training targets (control run).')
    train.add_argument('--literal-r2', action='store_true',
                       help='Divide by the prediction spread in R2.')
    reconstruct = commands.add_parser('reconstruct', parents=[common],
                                      help='Predict budgets from a record.')
    reconstruct.add_argument('models', help='models.json from train')
    reconstruct.add_argument('record', help='record CSV with feature columns')
    commands.add_parser('validate', parents=[common],
                        help='Physics and solver self-checks.')
    return parser


def main(argv):
    namespace = build_parser().parse_args(argv[1:])
    logging.basicConfig(
        format='====> %(message)s',
        level=logging.DEBUG if namespace.verbose else logging.INFO)

    try:
        config = load_config(namespace.config)
        config.override(seed=namespace.seed, realizations=namespace.realizations,
                        trajectories=namespace.trajectories,
                        shots=namespace.shots, restarts=namespace.restarts)
        if namespace.command == 'generate-dataset' and namespace.realizations:
            config.override(dataset_size=namespace.realizations)
        if not path.isdir(namespace.out):
            os.makedirs(namespace.out)

        if namespace.command == 'budget':
            return cmd_budget(config, namespace.out)
        if namespace.command == 'generate-dataset':
            return cmd_generate_dataset(config, namespace.out)
        if namespace.command == 'train':
            return cmd_train(config, namespace.out, namespace.dataset,
                             namespace.shuffle_labels, namespace.literal_r2)
        if namespace.command == 'reconstruct':
            return cmd_reconstruct(config, namespace.out, namespace.models,
                                   namespace.record)
        return cmd_validate(config, namespace.out)
    except (ConfigError, IOError) as e:
        print('Error: %s' % e)
        return 1


def run():
    sys.exit(main(sys.argv) or 0)


if __name__ == '__main__':
    run()
