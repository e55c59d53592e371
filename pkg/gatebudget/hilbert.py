"""Operator algebra for one to three truncated transmons.

Everything in here works in angular units: frequencies are rad/ns, times
ns. Config documents talk GHz and MHz; ``ghz()`` and ``mhz()`` convert.

The two-qubit system is always ordered Q1, C, Q2. Bare product states
are indexed in row-major order over the element levels, so with three
levels each ``|i c j>`` lives at ``9*i + 3*c + j``.
"""

import functools
import itertools
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize


__all__ = ('InvalidArgument', 'AmbiguousBasisError', 'TransmonParams',
           'SystemSpec', 'EigenFrame', 'ghz', 'mhz', 'KB_OVER_HBAR',
           'annihilation', 'number', 'embed', 'sqg_hamiltonian',
           'system_hamiltonian', 'tqg_hamiltonian', 'hamiltonian_derivative',
           'diagonalize', 'identify_computational_states',
           'assign_product_labels', 'vectorize', 'devectorize',
           'liouvillian_unitary', 'dissipator_superop', 'lindblad_rhs',
           'zz_coupling', 'find_idle_point')


log = logging.getLogger(__name__)


# k_B / hbar in rad/ns per mK.
KB_OVER_HBAR = 0.13092


def ghz(value):
    return 2 * np.pi * value


def mhz(value):
    return 2 * np.pi * value * 1e-3


class InvalidArgument(ValueError):
    pass


class AmbiguousBasisError(Exception):
    def __init__(self, message, overlaps=None):
        Exception.__init__(self, message)
        self.overlaps = overlaps


@dataclass(frozen=True)
class TransmonParams:
    omega: float
    alpha: float
    omega_max: float = None
    asym_d: float = 0.0
    levels: int = 3
    role: str = 'qubit'

    def __post_init__(self):
        if self.levels < 2:
            raise InvalidArgument('levels must be at least 2, got %s' % self.levels)
        if self.alpha >= 0:
            raise InvalidArgument('anharmonicity must be negative')
        if self.omega_max is not None and self.omega > self.omega_max * (1 + 1e-12):
            raise InvalidArgument('omega above omega_max')
        if not 0 <= self.asym_d < 1:
            raise InvalidArgument('asym_d must be in [0, 1)')
        if self.role not in ('qubit', 'coupler'):
            raise InvalidArgument('role must be qubit or coupler')

    @property
    def tunable(self):
        return self.omega_max is not None

    def to_json(self):
        return {
            'omega_ghz': self.omega / (2 * np.pi),
            'alpha_mhz': self.alpha / (2 * np.pi) * 1e3,
            'omega_max_ghz': None if self.omega_max is None
                else self.omega_max / (2 * np.pi),
            'asym_d': self.asym_d,
            'levels': self.levels,
            'role': self.role,
        }

    @classmethod
    def from_json(cls, doc):
        omega_max = doc.get('omega_max_ghz')
        return cls(omega=ghz(doc['omega_ghz']),
                   alpha=mhz(doc['alpha_mhz']),
                   omega_max=None if omega_max is None else ghz(omega_max),
                   asym_d=doc.get('asym_d', 0.0),
                   levels=doc.get('levels', 3),
                   role=doc.get('role', 'qubit'))


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Ordered transmons plus the symmetric coupling prefactors.

    Couplings follow g_ij = beta_ij * sqrt(omega_i * omega_j) and are
    recomputed whenever an element frequency moves.
    """

    elements: tuple
    beta: np.ndarray = None

    def __post_init__(self):
        elements = tuple(self.elements)
        n = len(elements)
        if not 1 <= n <= 3:
            raise InvalidArgument('between one and three elements supported')
        beta = np.zeros((n, n)) if self.beta is None \
            else np.array(self.beta, dtype=float)
        if beta.shape != (n, n):
            raise InvalidArgument('beta must be %dx%d' % (n, n))
        if np.any(np.diag(beta) != 0):
            raise InvalidArgument('beta_ii must be zero')
        if not np.allclose(beta, beta.T, atol=0, rtol=0):
            raise InvalidArgument('beta must be symmetric')
        if n == 3:
            roles = [e.role for e in elements]
            if roles != ['qubit', 'coupler', 'qubit']:
                raise InvalidArgument('two-qubit systems are ordered Q1, C, Q2')
            if not elements[2].omega > elements[0].omega:
                raise InvalidArgument('Q2 must sit above Q1')
        beta.flags.writeable = False
        object.__setattr__(self, 'elements', elements)
        object.__setattr__(self, 'beta', beta)

    @property
    def dims(self):
        return tuple(e.levels for e in self.elements)

    @property
    def total_dim(self):
        return int(np.prod(self.dims))

    @property
    def omegas(self):
        return np.array([e.omega for e in self.elements])

    @property
    def coupler_index(self):
        for i, e in enumerate(self.elements):
            if e.role == 'coupler':
                return i
        return None

    def with_element(self, index, **changes):
        elements = list(self.elements)
        elements[index] = replace(elements[index], **changes)
        return SystemSpec(tuple(elements), self.beta)

    def to_json(self):
        return {'elements': [e.to_json() for e in self.elements],
                'beta': self.beta.tolist()}

    @classmethod
    def from_json(cls, doc):
        return cls(tuple(TransmonParams.from_json(e) for e in doc['elements']),
                   doc.get('beta'))


@dataclass(frozen=True, eq=False)
class EigenFrame:
    energies: np.ndarray
    vectors: np.ndarray
    comp_labels: dict = field(default_factory=dict)
    overlaps: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.energies)

    def computational_indices(self):
        return [self.comp_labels[label] for label in sorted(self.comp_labels)]

    def computational_vectors(self):
        """Columns are the dressed computational states, in label order."""
        return self.vectors[:, self.computational_indices()]

    def labelled(self, spec):
        labels = identify_computational_states(self, spec)
        overlaps = {label: _label_overlap(self, spec, label, index)
                    for label, index in labels.items()}
        return replace(self, comp_labels=labels, overlaps=overlaps)


def annihilation(levels):
    if levels < 2:
        raise InvalidArgument('levels must be at least 2, got %s' % levels)
    return np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)


def number(levels):
    return np.diag(np.arange(levels)).astype(complex)


def embed(op, index, dims):
    """Lift a local operator to the full product space."""
    factors = [np.eye(d) for d in dims]
    factors[index] = op
    return functools.reduce(np.kron, factors)


def sqg_hamiltonian(p, drive=0.0):
    """omega n + alpha/2 n(n-1) - i drive (a - a^dag)"""
    a = annihilation(p.levels)
    n = number(p.levels)
    return (p.omega * n
            + 0.5 * p.alpha * (n @ n - n)
            - 1j * drive * (a - a.conj().T))


@functools.lru_cache(maxsize=None)
def _operators(dims):
    """Static pieces for a product space, cached per dims tuple."""
    lowering, numbers, quadratures = [], [], []
    for i, d in enumerate(dims):
        a = embed(annihilation(d), i, dims)
        lowering.append(a)
        n = a.conj().T @ a
        numbers.append(n)
        quadratures.append(a.conj().T - a)
    pairs = {}
    for i, j in itertools.combinations(range(len(dims)), 2):
        pairs[i, j] = quadratures[i] @ quadratures[j]
    anharm = [n @ n - n for n in numbers]
    for ops in (lowering, numbers, quadratures, anharm):
        for op in ops:
            op.flags.writeable = False
    return lowering, numbers, anharm, pairs


def system_hamiltonian(spec, omegas=None):
    """The coupled static Hamiltonian at the given element frequencies.

    Each unordered pair contributes -g_ij (a_i^dag - a_i)(a_j^dag - a_j)
    once.
    """
    omegas = spec.omegas if omegas is None else np.asarray(omegas, dtype=float)
    _, numbers, anharm, pairs = _operators(spec.dims)
    h = np.zeros((spec.total_dim, spec.total_dim), dtype=complex)
    for i, element in enumerate(spec.elements):
        h += omegas[i] * numbers[i] + 0.5 * element.alpha * anharm[i]
    for (i, j), xx in pairs.items():
        g = spec.beta[i, j] * np.sqrt(omegas[i] * omegas[j])
        if g:
            h -= g * xx
    return h


def tqg_hamiltonian(spec, coupler_omega):
    if len(spec.elements) != 3:
        raise InvalidArgument(
            'two-qubit Hamiltonian needs Q1, C, Q2; got %d elements'
            % len(spec.elements))
    omegas = spec.omegas
    omegas[1] = coupler_omega
    return system_hamiltonian(spec, omegas)


def hamiltonian_derivative(spec, index, omegas=None):
    """dH/d omega_i, including the frequency dependence of g_ij."""
    omegas = spec.omegas if omegas is None else np.asarray(omegas, dtype=float)
    _, numbers, _, pairs = _operators(spec.dims)
    dh = numbers[index].copy()
    for (i, j), xx in pairs.items():
        if index not in (i, j) or not spec.beta[i, j]:
            continue
        g = spec.beta[i, j] * np.sqrt(omegas[i] * omegas[j])
        dh -= g / (2 * omegas[index]) * xx
    return dh


def _fix_phases(vectors):
    # Largest component of every column becomes real positive.
    rows = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[rows, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)


def diagonalize(h):
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidArgument('matrix must be square')
    scale = max(1.0, np.max(np.abs(h)))
    if np.max(np.abs(h - h.conj().T)) > 1e-10 * scale:
        raise InvalidArgument('matrix is not Hermitian')
    energies, vectors = linalg.eigh(h)
    return EigenFrame(energies, _fix_phases(vectors))


def _label_state(spec, label):
    digits = [int(c) for c in label]
    if len(spec.elements) == 1:
        levels = digits
    else:
        levels = [digits[0], 0, digits[1]]
    return int(np.ravel_multi_index(levels, spec.dims))


def _labels(spec):
    n_qubits = 1 if len(spec.elements) == 1 else 2
    return [''.join(bits) for bits in itertools.product('01', repeat=n_qubits)]


def _label_overlap(frame, spec, label, index):
    return float(abs(frame.vectors[_label_state(spec, label), index]) ** 2)


def identify_computational_states(frame, spec):
    """Map each computational label to the eigenstate overlapping it most.

    Labels are '0'/'1' for a single transmon and '00'..'11' (Q1 then Q2,
    coupler in its ground state) for the coupled system.
    """
    labels, overlaps = {}, {}
    for label in _labels(spec):
        row = np.abs(frame.vectors[_label_state(spec, label)]) ** 2
        index = int(np.argmax(row))
        labels[label] = index
        overlaps[label] = float(row[index])
    if len(set(labels.values())) != len(labels):
        raise AmbiguousBasisError(
            'two computational labels matched the same eigenstate', overlaps)
    weak = {k: v for k, v in overlaps.items() if v <= 0.5}
    if weak:
        raise AmbiguousBasisError(
            'computational overlap too small: %s' % weak, overlaps)
    return labels


def assign_product_labels(frame, dims):
    """One bare product label per eigenindex, as a bijection."""
    cost = -np.abs(frame.vectors) ** 2
    bare, eig = optimize.linear_sum_assignment(cost)
    labels = [None] * frame.dim
    for b, e in zip(bare, eig):
        labels[e] = np.unravel_index(b, dims)
    return [tuple(int(x) for x in lab) for lab in labels]


def vectorize(rho):
    """Row stacking; leading batch axes are kept."""
    rho = np.asarray(rho)
    return rho.reshape(rho.shape[:-2] + (-1,))


def devectorize(v):
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.shape[-1])))
    if dim * dim != v.shape[-1]:
        raise InvalidArgument('vector length %d is not a square' % v.shape[-1])
    return v.reshape(v.shape[:-1] + (dim, dim))


def liouvillian_unitary(h):
    h = np.asarray(h)
    one = np.eye(h.shape[0])
    return -1j * (np.kron(h, one) - np.kron(one, h.T))


def dissipator_superop(jumps, dim=None):
    """Sum of Lindblad dissipators for (rate, operator) pairs."""
    jumps = list(jumps)
    if dim is None:
        if not jumps:
            raise InvalidArgument('no jump operators and no dimension given')
        dim = jumps[0][1].shape[0]
    one = np.eye(dim)
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for rate, c in jumps:
        if rate < 0:
            raise InvalidArgument('negative rate %r' % rate)
        if not rate:
            continue
        cdc = c.conj().T @ c
        out += rate * (np.kron(c, c.conj())
                       - 0.5 * (np.kron(cdc, one) + np.kron(one, cdc.T)))
    return out


def lindblad_rhs(h, jumps, rho):
    """-i[H, rho] + sum rate (C rho C^dag - 1/2 {C^dag C, rho})"""
    out = -1j * (h @ rho - rho @ h)
    for rate, c in jumps:
        if not rate:
            continue
        cd = c.conj().T
        cdc = cd @ c
        out += rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return out


def zz_coupling(spec, coupler_omega):
    frame = diagonalize(tqg_hamiltonian(spec, coupler_omega))
    labels = identify_computational_states(frame, spec)
    e = frame.energies
    return e[labels['11']] - e[labels['10']] - e[labels['01']] + e[labels['00']]


def find_idle_point(spec, margin=ghz(0.4)):
    """Coupler frequency where the static ZZ interaction vanishes.

    Falls back to the bracket point with the smallest |ZZ| when ZZ does
    not change sign.
    """
    coupler = spec.elements[1]
    upper = coupler.omega_max if coupler.tunable else coupler.omega
    lo, hi = spec.elements[2].omega + margin, 0.98 * upper
    if not lo < hi:
        raise InvalidArgument('no room for the coupler above the qubits')

    def zz(w):
        return zz_coupling(spec, w)

    grid = np.linspace(lo, hi, 25)
    values = []
    for w in grid:
        try:
            values.append(zz(w))
        except AmbiguousBasisError:
            values.append(np.nan)
    values = np.array(values)
    for k in range(len(grid) - 1, 0, -1):
        a, b = values[k - 1], values[k]
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0:
            root = optimize.brentq(zz, grid[k - 1], grid[k], xtol=1e-10)
            log.debug('zero-ZZ idle point at %.6f GHz', root / (2 * np.pi))
            return root
    k = int(np.nanargmin(np.abs(values)))
    warnings.warn('no ZZ zero crossing, idling at minimal |ZZ| = %.3g rad/ns'
                  % abs(values[k]), RuntimeWarning)
    return grid[k]
