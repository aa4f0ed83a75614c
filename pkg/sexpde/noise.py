"""Q-Wiener noise in the Neumann cosine eigenbasis of a rectangle.

Modes ``(i, j)`` with ``0 <= i, j <= n_max`` are ranked row-major,
``rank = i * (n_max + 1) + j``. The same rank indexes the covariance
eigenvalues, the columns of the projected mode matrix and the Gaussian
deviates of a ``NoiseStream``, which is what lets the exact reference and
the numerical scheme consume identical random numbers.
"""

import logging

import numpy as np
from scipy.special import ndtri

from .exceptions import TraceClassError
from .fem import l2_project
from .options import options


__all__ = (
    'SpectralBasis', 'CovarianceSpectrum', 'NoiseStream', 'build_spectrum',
    'default_n_max', 'project_modes', 'sample_increment',
)

log = logging.getLogger(__name__)


class SpectralBasis(object):
    """Eigenpairs of the Neumann Laplacian on ``[0, L1] x [0, L2]``.

    ``e_{i,j}(x, y) = e_i(x) e_j(y)`` with ``e_0 = sqrt(1/L)`` and
    ``e_i = sqrt(2/L) cos(i pi x / L)``; the eigenvalue of ``-Laplace`` is
    ``(i pi / L1)^2 + (j pi / L2)^2``.
    """

    def __init__(self, L1, L2, n_max):
        if n_max < 1:
            raise ValueError('n_max must be >= 1, got %r' % n_max)
        self.L1 = float(L1)
        self.L2 = float(L2)
        self.n_max = int(n_max)
        idx = np.arange(self.n_max + 1)
        i, j = np.meshgrid(idx, idx, indexing='ij')
        self.modes = np.column_stack([i.ravel(), j.ravel()])

    @property
    def n_modes(self):
        return self.modes.shape[0]

    def rank(self, i, j):
        return i * (self.n_max + 1) + j

    def eigenvalues(self):
        i, j = self.modes[:, 0], self.modes[:, 1]
        return (i * np.pi / self.L1) ** 2 + (j * np.pi / self.L2) ** 2

    @staticmethod
    def _axis(i, x, L):
        i = np.asarray(i)
        return np.where(i == 0, np.sqrt(1.0 / L),
                        np.sqrt(2.0 / L) * np.cos(i * np.pi * x / L))

    def evaluate(self, x, y, modes=None):
        """Values of the eigenfunctions at points, shape ``(points, modes)``."""
        modes = self.modes if modes is None else np.atleast_2d(modes)
        x = np.asarray(x, dtype=float)[:, None]
        y = np.asarray(y, dtype=float)[:, None]
        return (self._axis(modes[None, :, 0], x, self.L1) *
                self._axis(modes[None, :, 1], y, self.L2))

    def integrals(self):
        """``int e_{i,j}`` over the domain: only the constant mode survives."""
        out = np.zeros(self.n_modes)
        out[0] = np.sqrt(self.L1 * self.L2)
        return out

    def coefficients(self, func):
        """Spectral coefficients from ``func(i, j)`` evaluated per mode."""
        return np.array([func(i, j) for i, j in self.modes], dtype=float)

    def __repr__(self):
        return '<SpectralBasis [0, %g] x [0, %g], n_max=%d>' % (
            self.L1, self.L2, self.n_max)


class CovarianceSpectrum(object):
    """Covariance eigenvalues ``q_{i,j} = (i^2 + j^2)^{-(beta + delta)}``.

    The formula is undefined at ``(0, 0)``; that mode gets ``q00``.
    """

    def __init__(self, basis, beta, delta, q00=0.0, q=None):
        self.basis = basis
        self.beta = beta
        self.delta = delta
        self.q00 = q00
        # True when q follows the power law beyond the retained modes too
        self.series = q is None
        if q is None:
            r2 = (basis.modes ** 2).sum(axis=1).astype(float)
            q = np.empty(basis.n_modes)
            q[1:] = r2[1:] ** (-(beta + delta))
            q[0] = q00
        self.q = np.asarray(q, dtype=float)

    mode_list = property(lambda s: s.basis.modes)
    n_max = property(lambda s: s.basis.n_max)

    def __getitem__(self, mode):
        i, j = mode
        return self.q[self.basis.rank(i, j)]

    @property
    def is_zero(self):
        return not self.q.any()

    def trace(self):
        return float(self.q.sum())

    @classmethod
    def zero(cls, basis):
        return cls(basis, 0.0, 0.0, q=np.zeros(basis.n_modes))

    @classmethod
    def single(cls, basis, mode, value=1.0):
        q = np.zeros(basis.n_modes)
        q[basis.rank(*mode)] = value
        return cls(basis, 0.0, 0.0, q=q)


def build_spectrum(beta, delta, n_max, q00=0.0, L1=1.0, L2=1.0):
    """Covariance spectrum over modes ``0 <= i, j <= n_max``.

    Requires ``beta + delta > 1`` for a trace-class covariance.
    """
    if not beta + delta > 1:
        raise TraceClassError(
            'covariance is not trace class: need beta + delta > 1 so that '
            'sum (i^2 + j^2)^-(beta + delta) converges, got %g'
            % (beta + delta))
    if q00 < 0:
        raise ValueError('q00 must be non-negative, got %r' % q00)
    spectrum = CovarianceSpectrum(SpectralBasis(L1, L2, n_max), beta, delta,
                                  q00=q00)
    # partial-sum increment from the last shell of modes
    shell = spectrum.basis.modes.max(axis=1) == n_max
    increment = spectrum.q[shell].sum()
    if increment > 1e-6:
        log.warning('covariance partial sums not settled at n_max=%d: last '
                    'shell adds %.3e', n_max, increment)
    return spectrum


def default_n_max(mesh):
    """Largest ``n`` with ``(n + 1)^2`` modes not exceeding the node count."""
    return max(1, int(np.floor(np.sqrt(mesh.n_nodes))) - 1)


class NoiseStream(object):
    """Standard normal deviates indexed by (realization, mode, step).

    Each ``(realization, step)`` pair keys its own Philox generator through
    a ``SeedSequence`` hash of ``(seed, realization, step)``; the deviate
    of mode rank ``k`` is the inverse normal CDF of the ``k``-th raw
    output. Values therefore depend on the indices only, never on the order
    in which they are requested or on the thread requesting them.
    """

    def __init__(self, master_seed):
        master_seed = int(master_seed)
        if not 0 <= master_seed < 2 ** 64:
            raise ValueError('seed must be an unsigned 64-bit integer, got %r'
                             % master_seed)
        self.master_seed = master_seed

    def _key(self, r, m):
        seq = np.random.SeedSequence([self.master_seed, int(r), int(m)])
        return seq.generate_state(2, np.uint64)

    def gaussians(self, r, m, count):
        """Deviates for mode ranks ``0 .. count-1`` at ``(r, m)``."""
        bits = np.random.Philox(key=self._key(r, m))
        raw = bits.random_raw(count)
        uniform = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
        return ndtri(uniform)

    def gaussian(self, r, k, m):
        return float(self.gaussians(r, m, k + 1)[k])

    def __repr__(self):
        return '<NoiseStream seed=%d>' % self.master_seed


def project_modes(basis, spectrum, ops):
    """Mode matrix ``E``: column ``k`` is ``P_h e_{i(k), j(k)}``.

    Computed once per (operators, basis) pair and cached on ``ops``.
    """
    mesh = ops.mesh
    if not (np.isclose(basis.L1, mesh.L1) and np.isclose(basis.L2, mesh.L2)):
        raise ValueError('basis domain [0, %g] x [0, %g] does not match the '
                         'mesh [0, %g] x [0, %g]'
                         % (basis.L1, basis.L2, mesh.L1, mesh.L2))
    if spectrum.basis.n_modes != basis.n_modes:
        raise ValueError('spectrum has %d modes, basis %d'
                         % (spectrum.basis.n_modes, basis.n_modes))

    def build():
        n = basis.n_modes
        points = 3 * ops.mesh.n_triangles
        width = max(1, options.PROJECTION_BLOCK // points)
        log.debug('projecting %d modes onto %r, %d per block', n, ops,
                  min(width, n))
        E = np.empty((ops.dim, n))
        for start in range(0, n, width):
            block = basis.modes[start:start + width]
            E[:, start:start + width] = l2_project(
                ops, lambda x, y: basis.evaluate(x, y, block))
        E.setflags(write=False)
        return E

    return ops.cached(('modes', basis.L1, basis.L2, basis.n_max), build)


def sample_increment(stream, r, m, dt, spectrum, E):
    """Nodal vector of ``P_h (W(t_{m+1}) - W(t_m))`` for realization ``r``."""
    if not dt > 0:
        raise ValueError('dt must be positive, got %r' % dt)
    if spectrum.is_zero:
        return np.zeros(E.shape[0])
    g = np.sqrt(spectrum.q * dt) * stream.gaussians(r, m, spectrum.q.shape[0])
    return E @ g
