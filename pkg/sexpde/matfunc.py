"""Actions of ``exp(tA)`` and ``phi_1(tA)`` on vectors.

``A`` is only ever accessed through its action ``v -> A v`` (a
``MatAction``); for the finite element operator each application costs one
sparse mass solve. Large operators go through an Arnoldi projection with
an a posteriori error estimate, small ones through a cached dense
exponential.
"""

import logging
import threading
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy import sparse

from .exceptions import KrylovConvergenceError
from .options import options


__all__ = (
    'KrylovConfig', 'MatAction', 'expm_action', 'phi1_action', 'dense_expm',
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KrylovConfig:
    """Tolerance policy for the exponential actions.

    ``substeps`` is the number of pieces ``[0, t]`` is split into at
    first; when the error estimate exceeds ``tol`` the count is doubled
    and the action restarted, up to ``max_substeps``. Operators of
    dimension up to ``dense_cutoff`` are handled densely (``None`` means
    the package default, see ``sexpde.options``).
    """
    max_subspace: int = 64
    tol: float = 1e-8
    substeps: int = 1
    max_substeps: int = 1024
    dense_cutoff: int = None

    def __post_init__(self):
        if self.max_subspace < 2:
            raise ValueError('max_subspace must be >= 2, got %r'
                             % self.max_subspace)
        if not self.tol > 0:
            raise ValueError('tol must be positive, got %r' % self.tol)
        if self.substeps < 1 or self.max_substeps < self.substeps:
            raise ValueError('need 1 <= substeps <= max_substeps, got %r, %r'
                             % (self.substeps, self.max_substeps))

    @property
    def cutoff(self):
        if self.dense_cutoff is None:
            return options.DENSE_ACTION_CUTOFF
        return self.dense_cutoff

    def krylov_only(self):
        return replace(self, dense_cutoff=0)


class MatAction(object):
    """A linear map given by its action, ``apply(v) == A @ v``.

    Dense exponentials of small operators are memoized per time value, so
    a ``MatAction`` reused across time steps pays for them once.
    """

    def __init__(self, apply, dim, matrix=None):
        self.apply = apply
        self.dim = dim
        self._matrix = matrix
        self._lock = threading.Lock()
        self._exp = {}
        self._phi1 = {}

    @classmethod
    def from_matrix(cls, A):
        if sparse.issparse(A):
            A = A.tocsr()
        else:
            A = np.asarray(A, dtype=float)
        return cls(lambda v: A @ v, A.shape[0], matrix=A)

    @classmethod
    def from_operators(cls, ops):
        """The discrete operator ``A_h`` of assembled FEM operators."""
        from .fem import apply_Ah
        return cls(lambda v: apply_Ah(ops, v), ops.dim)

    def __call__(self, v):
        return self.apply(v)

    def dense(self):
        with self._lock:
            if self._matrix is None:
                self._matrix = np.column_stack(
                    [self.apply(e) for e in np.eye(self.dim)])
            elif sparse.issparse(self._matrix):
                self._matrix = self._matrix.toarray()
            return self._matrix

    def exp_dense(self, t):
        A = self.dense()
        with self._lock:
            if t not in self._exp:
                self._exp[t] = dense_expm(t * A)
            return self._exp[t]

    def phi1_dense(self, t):
        """``phi_1(tA)`` from ``exp([[tA, I], [0, 0]])``."""
        A = self.dense()
        n = self.dim
        with self._lock:
            if t not in self._phi1:
                block = np.zeros((2 * n, 2 * n))
                block[:n, :n] = t * A
                block[:n, n:] = np.eye(n)
                self._phi1[t] = scipy.linalg.expm(block)[:n, n:]
            return self._phi1[t]


def as_action(A):
    if isinstance(A, MatAction):
        return A
    return MatAction.from_matrix(A)


def dense_expm(A):
    """Scaling-and-squaring Pade exponential of a dense matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError('expected a square matrix, got shape %r'
                         % (A.shape,))
    if A.shape[0] > options.DENSE_EXPM_LIMIT:
        raise ValueError('dense exponential limited to dimension %d, got %d'
                         % (options.DENSE_EXPM_LIMIT, A.shape[0]))
    return scipy.linalg.expm(A)


def _arnoldi_exp(A, w, tau, m):
    """One Arnoldi approximation of ``exp(tau A) w``.

    Returns the approximation and the estimate
    ``beta h_{k+1,k} tau |e_k^T phi_1(tau H) e_1|`` of its error, which is
    zero after a happy breakdown.
    """
    n = A.dim
    beta = np.linalg.norm(w)
    if beta == 0:
        return w.copy(), 0.0
    V = np.zeros((m + 1, n))
    H = np.zeros((m + 1, m))
    V[0] = w / beta
    k = m
    breakdown = False
    for j in range(m):
        u = np.asarray(A.apply(V[j]), dtype=float)
        scale = np.linalg.norm(u)
        for i in range(j + 1):
            H[i, j] = V[i] @ u
            u -= H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(u)
        if H[j + 1, j] <= 1e-12 * scale or j + 1 == n:
            k = j + 1
            breakdown = True
            break
        V[j + 1] = u / H[j + 1, j]

    # exp([[tau H, e1], [0, 0]]) holds exp(tau H) and phi_1(tau H) e1
    aug = np.zeros((k + 1, k + 1))
    aug[:k, :k] = tau * H[:k, :k]
    aug[0, k] = 1.0
    E = scipy.linalg.expm(aug)
    y = beta * (V[:k].T @ E[:k, 0])
    if breakdown:
        return y, 0.0
    return y, beta * H[k, k - 1] * tau * abs(E[k - 1, k])


def _krylov_expm(A, v, t, cfg):
    m = min(cfg.max_subspace, A.dim)
    budget = cfg.tol * np.linalg.norm(v)
    substeps = cfg.substeps
    while True:
        tau = t / substeps
        w = v
        err = 0.0
        for _ in range(substeps):
            w, e = _arnoldi_exp(A, w, tau, m)
            err += e
            if err > budget:
                break
        else:
            return w
        if 2 * substeps > cfg.max_substeps:
            raise KrylovConvergenceError(
                'exponential action did not converge with subspace %d and '
                '%d substeps' % (m, substeps), err / np.linalg.norm(v))
        log.debug('error estimate %.3e above %.3e with %d substeps, '
                  'restarting with %d', err, budget, substeps, 2 * substeps)
        substeps *= 2


def _prepare(A, v, t):
    A = as_action(A)
    v = np.asarray(v, dtype=float)
    if v.shape != (A.dim,):
        raise ValueError('vector of shape %r does not match dimension %d'
                         % (v.shape, A.dim))
    if not t >= 0:
        raise ValueError('time must be non-negative, got %r' % t)
    return A, v


def expm_action(A, v, t, cfg=None):
    """Return ``exp(tA) v`` to a relative accuracy of ``cfg.tol``."""
    cfg = cfg or KrylovConfig()
    A, v = _prepare(A, v, t)
    if t == 0 or not v.any():
        return v.copy()
    if A.dim <= cfg.cutoff:
        return A.exp_dense(t) @ v
    return _krylov_expm(A, v, t, cfg)


def phi1_action(A, v, t, cfg=None):
    """Return ``phi_1(tA) v = (tA)^{-1}(exp(tA) - I) v``.

    ``A`` is never inverted: the result is read off the exponential of the
    block map ``[[tA, v / |v|], [0, 0]]`` applied to ``(0, |v|)``.
    """
    cfg = cfg or KrylovConfig()
    A, v = _prepare(A, v, t)
    if t == 0 or not v.any():
        return v.copy()
    if A.dim <= cfg.cutoff:
        return A.phi1_dense(t) @ v

    n = A.dim
    beta = np.linalg.norm(v)
    direction = v / beta

    def apply(z):
        out = np.empty(n + 1)
        out[:n] = t * np.asarray(A.apply(z[:n]), dtype=float) + z[n] * direction
        out[n] = 0.0
        return out

    start = np.zeros(n + 1)
    start[n] = beta
    z = expm_action(MatAction(apply, n + 1), start, 1.0, cfg.krylov_only())
    return z[:n]
