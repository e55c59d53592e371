"""Gaussian process regression with a sum of RBF kernels.

One model is trained per budget column. Inputs and targets are
standardised; hyperparameters are fitted in log space by bounded
quasi-Newton search from several starting points.
"""

import csv
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

from .hilbert import InvalidArgument
from .noise import substream


__all__ = ('FitError', 'KernelParams', 'GprModel', 'BudgetDataset',
           'kernel_matrix', 'log_marginal_likelihood', 'condition', 'fit',
           'predict', 'r2_score', 'column_scores', 'weighted_r2',
           'split_dataset', 'LOG_BOUNDS')


log = logging.getLogger(__name__)


# (log amplitude, log length scale, log noise variance)
LOG_BOUNDS = ((-10.0, 5.0), (-3.0, 6.0), (-12.0, 2.0))

JITTERS = (0.0, 1e-10, 1e-8, 1e-6)


class FitError(Exception):
    pass


@dataclass(frozen=True)
class KernelParams:
    amplitudes: tuple
    lengths: tuple
    noise: float = 1e-2

    def __post_init__(self):
        a = tuple(float(x) for x in self.amplitudes)
        l = tuple(float(x) for x in self.lengths)
        if not 1 <= len(a) <= 4 or len(a) != len(l):
            raise InvalidArgument('need 1 to 4 (amplitude, length) pairs')
        if min(a) < 0 or min(l) <= 0 or self.noise < 0:
            raise InvalidArgument('kernel parameters out of range')
        object.__setattr__(self, 'amplitudes', a)
        object.__setattr__(self, 'lengths', l)

    @property
    def components(self):
        return len(self.amplitudes)

    def to_log(self):
        return np.log(np.r_[self.amplitudes, self.lengths, self.noise])

    @classmethod
    def from_log(cls, theta):
        k = (len(theta) - 1) // 2
        values = np.exp(theta)
        return cls(tuple(values[:k]), tuple(values[k:2 * k]), float(values[-1]))

    @classmethod
    def bounds(cls, components):
        (a, l, s) = LOG_BOUNDS
        return [a] * components + [l] * components + [s]

    def to_json(self):
        return {'amplitudes': list(self.amplitudes),
                'lengths': list(self.lengths), 'noise': self.noise}


def _check_dims(x1, x2):
    if x1.shape[1] != x2.shape[1]:
        raise InvalidArgument('feature dimension %d does not match %d'
                              % (x2.shape[1], x1.shape[1]))


def _terms(sq, params):
    return [a * np.exp(-sq / (2 * l ** 2))
            for a, l in zip(params.amplitudes, params.lengths)]


def kernel_matrix(x1, x2, params):
    x1, x2 = np.atleast_2d(x1), np.atleast_2d(x2)
    _check_dims(x1, x2)
    return sum(_terms(cdist(x1, x2, 'sqeuclidean'), params))


def _factor(k):
    n = k.shape[0]
    for jitter in JITTERS:
        try:
            chol = linalg.cholesky(k + jitter * np.eye(n), lower=True)
        except linalg.LinAlgError:
            log.debug('Cholesky failed, escalating jitter past %g', jitter)
            continue
        return chol, jitter
    raise linalg.LinAlgError('covariance not positive definite')


def log_marginal_likelihood(params, x, y, gradient=False):
    """log p(y | X) and optionally its gradient in log-parameter order."""
    x = np.atleast_2d(x)
    y = np.asarray(y, dtype=float)
    n = len(y)
    sq = cdist(x, x, 'sqeuclidean')
    terms = _terms(sq, params)
    k = sum(terms) + params.noise * np.eye(n)
    chol, _ = _factor(k)
    alpha = linalg.cho_solve((chol, True), y)
    value = (-0.5 * y @ alpha - np.log(np.diag(chol)).sum()
             - 0.5 * n * np.log(2 * np.pi))
    if not gradient:
        return value
    w = np.outer(alpha, alpha) - linalg.cho_solve((chol, True), np.eye(n))
    grad = [0.5 * np.sum(w * t) for t in terms]
    grad += [0.5 * np.sum(w * t * sq) / l ** 2
             for t, l in zip(terms, params.lengths)]
    grad.append(0.5 * params.noise * np.trace(w))
    return value, np.array(grad)


@dataclass(frozen=True, eq=False)
class GprModel:
    params: KernelParams
    x_train: np.ndarray
    y_train: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0
    lml: float = None
    chol: np.ndarray = field(default=None, repr=False)
    alpha: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.chol is None:
            k = kernel_matrix(self.x_train, self.x_train, self.params) \
                + self.params.noise * np.eye(len(self.x_train))
            chol, _ = _factor(k)
            object.__setattr__(self, 'chol', chol)
            object.__setattr__(self, 'alpha',
                               linalg.cho_solve((chol, True), self.y_train))

    @property
    def prior_variance(self):
        return sum(self.params.amplitudes) * self.y_scale ** 2

    def to_json(self):
        return {'kernel': self.params.to_json(),
                'x_train': self.x_train.tolist(),
                'y_train': self.y_train.tolist(),
                'alpha': self.alpha.tolist(),
                'x_mean': self.x_mean.tolist(), 'x_scale': self.x_scale.tolist(),
                'y_mean': self.y_mean, 'y_scale': self.y_scale, 'lml': self.lml}

    @classmethod
    def from_json(cls, doc):
        k = doc['kernel']
        return cls(KernelParams(k['amplitudes'], k['lengths'], k['noise']),
                   np.array(doc['x_train']), np.array(doc['y_train']),
                   np.array(doc['x_mean']), np.array(doc['x_scale']),
                   doc['y_mean'], doc['y_scale'], doc.get('lml'))


def _standardizer(values, axis=0):
    mean = np.mean(values, axis=axis)
    scale = np.std(values, axis=axis)
    return mean, np.where(scale > 0, scale, 1.0)


def condition(params, x, y, standardize=True):
    """Model at fixed hyperparameters."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if standardize:
        x_mean, x_scale = _standardizer(x)
        y_mean, y_scale = _standardizer(y)
    else:
        x_mean, x_scale = np.zeros(x.shape[1]), np.ones(x.shape[1])
        y_mean, y_scale = 0.0, 1.0
    xs = (x - x_mean) / x_scale
    ys = (y - y_mean) / y_scale
    return GprModel(params, xs, ys, x_mean, x_scale, float(y_mean),
                    float(y_scale), log_marginal_likelihood(params, xs, ys))


def fit(x, y, components=3, restarts=20, seed=0):
    """Best-of-restarts maximum-likelihood model for one target column."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    if len(y) < 10:
        raise InvalidArgument('need at least 10 training rows, got %d' % len(y))
    x_mean, x_scale = _standardizer(x)
    y_mean, y_scale = _standardizer(y)
    xs = (x - x_mean) / x_scale
    ys = (y - y_mean) / y_scale
    bounds = KernelParams.bounds(components)
    lo, hi = np.array(bounds).T

    def objective(theta):
        value, grad = log_marginal_likelihood(
            KernelParams.from_log(theta), xs, ys, gradient=True)
        return -value, -grad

    rng = substream(seed, 11)
    first = np.r_[np.zeros(components),
                  np.log(np.sqrt(x.shape[1])) + np.arange(components) - 1,
                  np.log(1e-2)]
    best = None
    for r in range(restarts):
        start = np.clip(first, lo, hi) if r == 0 else rng.uniform(lo, hi)
        try:
            res = optimize.minimize(objective, start, jac=True, method='L-BFGS-B',
                                    bounds=bounds)
        except linalg.LinAlgError:
            log.debug('restart %d rejected: covariance not positive definite', r)
            continue
        if not np.isfinite(res.fun):
            continue
        log.debug('restart %d: lml %.6g', r, -res.fun)
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitError('all %d restarts failed' % restarts)
    params = KernelParams.from_log(best.x)
    for a, l in zip(params.amplitudes, params.lengths):
        if a < 1e-4 and l < 0.1:
            log.debug('kernel component collapsed (A=%.2g, l=%.2g)', a, l)
    return GprModel(params, xs, ys, x_mean, x_scale, float(y_mean),
                    float(y_scale), float(-best.fun))


def predict(model, x_star):
    """Mean and latent variance at ``x_star``, in target units."""
    x_star = np.atleast_2d(np.asarray(x_star, dtype=float))
    _check_dims(model.x_train, x_star)
    xs = (x_star - model.x_mean) / model.x_scale
    k_star = kernel_matrix(model.x_train, xs, model.params)
    mean = k_star.T @ model.alpha
    v = linalg.solve_triangular(model.chol, k_star, lower=True)
    var = sum(model.params.amplitudes) - np.sum(v ** 2, axis=0)
    if np.any(var < -1e-10):
        warnings.warn('negative predictive variance clamped (%.3g)' % var.min(),
                      RuntimeWarning)
    var = np.clip(var, 0.0, None)
    return model.y_mean + model.y_scale * mean, model.y_scale ** 2 * var


def r2_score(pred, true, literal=False):
    """Coefficient of determination.

    ``literal`` divides by the spread of the predictions around the true
    mean instead of the spread of the true values.
    """
    pred = np.asarray(pred, dtype=float)
    true = np.asarray(true, dtype=float)
    if len(true) < 2:
        raise InvalidArgument('need at least two rows')
    ref = pred if literal else true
    denom = np.sum((ref - true.mean()) ** 2)
    if denom == 0:
        raise InvalidArgument('zero variance')
    return float(1 - np.sum((true - pred) ** 2) / denom)


def column_scores(pred, true, literal=False):
    """Per-column R2 and target variance; NaN score for constant columns."""
    pred = np.atleast_2d(pred)
    true = np.atleast_2d(true)
    scores, variances = [], []
    for p, t in zip(pred.T, true.T):
        var = float(np.var(t))
        try:
            scores.append(r2_score(p, t, literal) if var > 0 else np.nan)
        except InvalidArgument:
            scores.append(np.nan)
        variances.append(var)
    return np.array(scores), np.array(variances)


def weighted_r2(scores, variances):
    """Variance-weighted mean of per-column scores."""
    scores = np.asarray(scores, dtype=float)
    variances = np.asarray(variances, dtype=float)
    keep = (variances > 0) & np.isfinite(scores)
    if not np.all(keep):
        warnings.warn('%d zero-variance columns left out of the weighted R2'
                      % np.sum(~keep), RuntimeWarning)
    if not np.any(keep):
        raise InvalidArgument('no column with nonzero variance')
    w = variances[keep]
    return float(np.sum(w * scores[keep]) / np.sum(w))


def split_dataset(n, fraction=0.9, seed=0):
    """Seeded (train, test) index split."""
    if n < 2:
        raise InvalidArgument('need at least two rows to split')
    order = substream(seed, 13).permutation(n)
    cut = min(max(int(round(fraction * n)), 1), n - 1)
    return np.sort(order[:cut]), np.sort(order[cut:])


TARGET_PREFIX = 'target:'


@dataclass
class BudgetDataset:
    feature_names: list
    target_names: list
    features: np.ndarray = None
    targets: np.ndarray = None
    realizations: list = field(default_factory=list)

    def __post_init__(self):
        if self.features is None:
            self.features = np.empty((0, len(self.feature_names)))
        if self.targets is None:
            self.targets = np.empty((0, len(self.target_names)))
        if self.features.shape[1] != len(self.feature_names):
            raise InvalidArgument('feature columns do not match their names')

    def __len__(self):
        return len(self.features)

    def append(self, realization, features, targets):
        features = np.asarray(features, dtype=float)
        if features.shape != (len(self.feature_names),):
            raise InvalidArgument('feature vector of length %d, expected %d'
                                  % (features.size, len(self.feature_names)))
        self.features = np.vstack([self.features, features])
        self.targets = np.vstack([self.targets, np.asarray(targets, dtype=float)])
        self.realizations.append(realization)

    def write_csv(self, filename):
        with open(filename, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['realization'] + list(self.feature_names)
                            + [TARGET_PREFIX + t for t in self.target_names])
            for r, x, y in zip(self.realizations, self.features, self.targets):
                writer.writerow([r] + ['%.12g' % v for v in x]
                                + ['%.12g' % v for v in y])

    @classmethod
    def read_csv(cls, filename):
        with open(filename, newline='') as f:
            reader = csv.reader(f)
            header = next(reader)
            rows = list(reader)
        names = header[1:]
        targets = [n[len(TARGET_PREFIX):] for n in names if n.startswith(TARGET_PREFIX)]
        features = [n for n in names if not n.startswith(TARGET_PREFIX)]
        data = np.array([[float(v) for v in row[1:]] for row in rows]).reshape(
            len(rows), len(names))
        return cls(features, targets, data[:, :len(features)],
                   data[:, len(features):], [int(row[0]) for row in rows])
