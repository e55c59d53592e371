"""Test the Gaussian process regression.
"""

import numpy as np
import pytest

from gatebudget.gpr import (
    KernelParams, GprModel, BudgetDataset, kernel_matrix,
    log_marginal_likelihood, condition, fit, predict, r2_score,
    column_scores, weighted_r2, split_dataset)
from gatebudget.hilbert import InvalidArgument


def smooth_data(n=40):
    x = np.linspace(0, 1, n)[:, None]
    return x, np.sin(6 * x[:, 0])


class TestKernel(object):

    def test_params(self):
        params = KernelParams((1.0, 0.5), (0.3, 2.0), 0.1)
        assert params.components == 2
        again = KernelParams.from_log(params.to_log())
        assert again.amplitudes == pytest.approx(params.amplitudes)
        assert again.lengths == pytest.approx(params.lengths)
        assert again.noise == pytest.approx(0.1)
        assert len(KernelParams.bounds(3)) == 7

    def test_validation(self):
        with pytest.raises(InvalidArgument):
            KernelParams((1.0,) * 5, (1.0,) * 5)
        with pytest.raises(InvalidArgument):
            KernelParams((1.0, 1.0), (1.0,))
        with pytest.raises(InvalidArgument):
            KernelParams((-1.0,), (1.0,))

    def test_kernel_matrix(self):
        params = KernelParams((2.0,), (1.0,))
        x = np.array([[0.0], [1.0]])
        k = kernel_matrix(x, x, params)
        assert k[0, 0] == pytest.approx(2.0)
        assert k[0, 1] == pytest.approx(2.0 * np.exp(-0.5))
        with pytest.raises(InvalidArgument):
            kernel_matrix(x, np.zeros((1, 2)), params)

    def test_gradient(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(15, 2))
        y = rng.normal(size=15)
        params = KernelParams((1.0, 0.8), (0.5, 2.0), 0.1)
        _, grad = log_marginal_likelihood(params, x, y, gradient=True)
        theta = params.to_log()
        eps = 1e-6
        numeric = []
        for i in range(len(theta)):
            step = np.zeros_like(theta)
            step[i] = eps
            up = log_marginal_likelihood(KernelParams.from_log(theta + step), x, y)
            down = log_marginal_likelihood(KernelParams.from_log(theta - step), x, y)
            numeric.append((up - down) / (2 * eps))
        assert grad == pytest.approx(numeric, rel=1e-4, abs=1e-6)


class TestRegression(object):

    def test_fit_and_predict(self):
        x, y = smooth_data()
        model = fit(x, y, components=1, restarts=3, seed=1)
        x_star = np.array([[0.13], [0.51], [0.87]])
        mean, var = predict(model, x_star)
        assert mean == pytest.approx(np.sin(6 * x_star[:, 0]), abs=0.05)
        assert np.all(var >= 0)
        assert np.all(var < model.prior_variance)

    def test_needs_rows(self):
        x, y = smooth_data(5)
        with pytest.raises(InvalidArgument):
            fit(x, y)

    def test_json(self):
        x, y = smooth_data(12)
        model = condition(KernelParams((1.0,), (0.5,), 1e-3), x, y)
        again = GprModel.from_json(model.to_json())
        x_star = np.array([[0.25], [0.75]])
        assert predict(again, x_star)[0] == pytest.approx(predict(model, x_star)[0])

    def test_dimensions_checked(self):
        x, y = smooth_data(12)
        model = condition(KernelParams((1.0,), (0.5,)), x, y, standardize=False)
        assert model.y_scale == 1.0
        with pytest.raises(InvalidArgument):
            predict(model, np.zeros((1, 3)))


class TestScores(object):

    def test_r2(self):
        true = np.array([0.0, 1.0, 2.0, 3.0])
        assert r2_score(true, true) == 1.0
        assert r2_score(np.full(4, 1.5), true) == pytest.approx(0.0)
        pred = np.array([0.0, 1.0, 2.0, 4.0])
        assert r2_score(pred, true) == pytest.approx(0.8)
        assert r2_score(pred, true, literal=True) == pytest.approx(1 - 1 / 9.0)
        with pytest.raises(InvalidArgument):
            r2_score([1.0], [1.0])

    def test_column_scores(self):
        true = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
        scores, variances = column_scores(true, true)
        assert scores[0] == 1.0
        assert np.isnan(scores[1])
        assert variances[1] == 0.0

    def test_weighted(self):
        assert weighted_r2([1.0, 0.0], [3.0, 1.0]) == pytest.approx(0.75)
        with pytest.warns(RuntimeWarning):
            assert weighted_r2([0.5, np.nan], [1.0, 0.0]) == pytest.approx(0.5)

    def test_split(self):
        train, test = split_dataset(10, seed=4)
        assert len(train) == 9 and len(test) == 1
        assert set(train) | set(test) == set(range(10))
        assert np.array_equal(train, split_dataset(10, seed=4)[0])
        with pytest.raises(InvalidArgument):
            split_dataset(1)


class TestDataset(object):

    def test_csv(self, tmpdir):
        data = BudgetDataset(['p1_+X', 'p1_-X'], ['T1@N1'])
        data.append(0, [0.9, 0.1], [1e-4])
        data.append(3, [0.8, 0.2], [2e-4])
        filename = str(tmpdir.join('dataset.csv'))
        data.write_csv(filename)
        with open(filename) as f:
            assert f.readline().strip() == 'realization,p1_+X,p1_-X,target:T1@N1'
        again = BudgetDataset.read_csv(filename)
        assert again.feature_names == data.feature_names
        assert again.target_names == ['T1@N1']
        assert again.realizations == [0, 3]
        assert np.allclose(again.targets, data.targets)
        assert len(again) == 2

    def test_append_checks_length(self):
        data = BudgetDataset(['a'], ['b'])
        with pytest.raises(InvalidArgument):
            data.append(0, [1.0, 2.0], [0.0])
