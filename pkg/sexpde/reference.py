"""Closed-form reference for the linear benchmark.

For ``dX = (D Laplace X - c X) dt + dW`` with Neumann boundary and noise
diagonal in the cosine basis, every mode is an Ornstein-Uhlenbeck process

    dX_k = -k_k X_k dt + sqrt(q_k) d beta_k,   k_k = D lambda_k + c - shift

which can be sampled exactly on any time grid and has closed-form
moments.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exprel

from .exceptions import TruncationError


__all__ = (
    'OuMode', 'OuModes', 'ou_step', 'exact_variance', 'exact_mean_phi1',
    'exact_second_moment', 'second_moment_tail', 'exact_modes',
    'simulate_exact_field', 'GalerkinModes',
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OuMode:
    """One mode: indices, decay rate ``k``, noise variance ``q``, ``x0``."""
    i: int
    j: int
    k: float
    q: float
    x0: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError('mode (%d, %d) has non-positive decay rate %r'
                             % (self.i, self.j, self.k))


class OuModes(object):
    """All retained modes at once, as arrays aligned with the mode ranks."""

    def __init__(self, basis, k, q, x0):
        self.basis = basis
        self.k = np.asarray(k, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.x0 = np.asarray(x0, dtype=float)
        if not np.all(self.k > 0):
            raise ValueError('decay rates must be positive, smallest is %g'
                             % self.k.min())

    @classmethod
    def build(cls, basis, spectrum, D, reaction, x0, shift=0.0):
        k = D * basis.eigenvalues() + reaction - shift
        return cls(basis, k, spectrum.q, x0)

    def __len__(self):
        return self.k.shape[0]

    def __getitem__(self, rank):
        i, j = self.basis.modes[rank]
        return OuMode(int(i), int(j), float(self.k[rank]),
                      float(self.q[rank]), float(self.x0[rank]))


def ou_step(x, mode, dt, xi):
    """Exact transition over ``dt`` driven by the standard normal ``xi``.

    ``mode`` may be an ``OuMode`` or an ``OuModes``, in which case ``x``
    and ``xi`` are arrays over the modes.
    """
    if not dt > 0:
        raise ValueError('dt must be positive, got %r' % dt)
    k, q = mode.k, mode.q
    std = np.sqrt(q / (2.0 * k) * -np.expm1(-2.0 * k * dt))
    return np.exp(-k * dt) * x + std * xi


def exact_variance(mode, t):
    """``Var X_k(t) = q / (2k) (1 - exp(-2 k t))``."""
    return mode.q / (2.0 * mode.k) * -np.expm1(-2.0 * mode.k * t)


def exact_mean_phi1(x0, t, basis, reaction=0.5, shift=0.0):
    """``E int X(t)``: only the constant mode has a non-zero integral."""
    k00 = reaction - shift
    return math.exp(-k00 * t) * float(x0[0]) * basis.integrals()[0]


def second_moment_tail(spectrum, D, reaction, shift=0.0, extra=20000):
    """Upper bound of ``sum q / (2k)`` over the modes beyond ``n_max``.

    Modes with ``max(i, j) = l`` number ``2l + 1`` and have
    ``i^2 + j^2 >= l^2``; the shells are summed explicitly for ``extra``
    values of ``l`` and the rest is bounded by an integral.
    """
    if not spectrum.series:
        return 0.0
    basis = spectrum.basis
    s = spectrum.beta + spectrum.delta
    a = D * math.pi ** 2 / max(basis.L1, basis.L2) ** 2
    c = reaction - shift
    n = basis.n_max
    ell = np.arange(n + 1, n + 1 + extra, dtype=float)
    tail = float(np.sum((2 * ell + 1) * ell ** (-2 * s) /
                        (2.0 * (a * ell ** 2 + c))))
    N = float(n + extra)
    if a > 0:
        p = 2 * s + 2
        tail += (2 * N ** (2 - p) / (p - 2) + N ** (1 - p) / (p - 1)) / (2 * a)
    else:
        p = 2 * s
        tail += (2 * N ** (2 - p) / (p - 2) + N ** (1 - p) / (p - 1)) / (2 * c)
    return tail


def exact_second_moment(x0, spectrum, t, D=0.1, reaction=0.5, shift=0.0,
                        tail_tolerance=0.05):
    """``E ||X(t)||^2`` summed over the retained modes.

    ``sum exp(-2 k t) x0^2 + sum q / (2k) (1 - exp(-2 k t))``. The bound
    on the neglected modes is logged and must not exceed
    ``tail_tolerance`` (``None`` disables the check).
    """
    if not t >= 0:
        raise ValueError('time must be non-negative, got %r' % t)
    modes = OuModes.build(spectrum.basis, spectrum, D, reaction, x0, shift)
    decay = np.exp(-2.0 * modes.k * t)
    value = math.fsum(decay * modes.x0 ** 2) + \
        math.fsum(exact_variance(modes, t))
    tail = second_moment_tail(spectrum, D, reaction, shift)
    log.debug('second moment %.6g at t=%g, truncation tail <= %.3e',
              value, t, tail)
    if tail_tolerance is not None and tail > tail_tolerance:
        raise TruncationError(
            'truncation tail bound %.3e exceeds %.3e; raise n_max'
            % (tail, tail_tolerance), tail)
    return value


def exact_modes(stream, r, cfg, modes):
    """Spectral coefficients at ``cfg.T`` of realization ``r``.

    Step ``m`` consumes ``stream.gaussians(r, m, ...)``, the deviates the
    numerical scheme uses for the same step.
    """
    x = modes.x0.copy()
    n = len(modes)
    for m in range(cfg.M_steps):
        x = ou_step(x, modes, cfg.dt, stream.gaussians(r, m, n))
    return x


def simulate_exact_field(stream, r, cfg, modes, E=None, points=None):
    """Nodal values of the exact solution at ``cfg.T``.

    With the mode matrix ``E`` the field is synthesized in the finite
    element space; otherwise the eigenfunctions are evaluated directly at
    ``points``.
    """
    x = exact_modes(stream, r, cfg, modes)
    if E is not None:
        return E @ x
    if points is None:
        raise ValueError('need either the mode matrix or evaluation points')
    return modes.basis.evaluate(points[:, 0], points[:, 1]) @ x


class GalerkinModes(object):
    """The benchmark in the retained modes, stepped like the scheme.

    Each mode follows the exponential Euler recursion of the finite
    element scheme with the exact eigenpairs in place of ``(K, M)``:

        y' = exp(-a dt) (y + sqrt(q dt) xi) - c dt phi1(-a dt) y

    with ``a = D lambda - shift`` and ``c`` the reaction. Compared with
    the finite element run on the same deviates, the difference is the
    spatial error alone.
    """

    def __init__(self, modes, reaction):
        self.modes = modes
        self.reaction = float(reaction)
        self.a = modes.k - self.reaction

    basis = property(lambda s: s.modes.basis)
    x0 = property(lambda s: s.modes.x0)
    q = property(lambda s: s.modes.q)

    def __len__(self):
        return len(self.modes)

    def factors(self, dt):
        """Per-step damping ``g`` of the mean and noise gain ``e^{-a dt}``."""
        if not dt > 0:
            raise ValueError('dt must be positive, got %r' % dt)
        decay = np.exp(-self.a * dt)
        g = decay - self.reaction * dt * exprel(-self.a * dt)
        return g, decay

    def step(self, y, dt, xi):
        g, decay = self.factors(dt)
        return g * y + decay * np.sqrt(self.q * dt) * xi

    def coefficients(self, stream, r, cfg):
        """Coefficients at ``cfg.T`` of realization ``r``; step ``m`` uses
        ``stream.gaussians(r, m, ...)`` like the scheme does."""
        y = self.x0.copy()
        n = len(self)
        for m in range(cfg.M_steps):
            y = self.step(y, cfg.dt, stream.gaussians(r, m, n))
        return y

    def mean(self, cfg):
        g, _ = self.factors(cfg.dt)
        return g ** cfg.M_steps * self.x0

    def variance(self, cfg):
        """``q dt e^{-2 a dt} sum_{m < M} g^{2m}`` per mode."""
        g, decay = self.factors(cfg.dt)
        g2, M = g * g, cfg.M_steps
        with np.errstate(divide='ignore', invalid='ignore'):
            geometric = np.where(np.isclose(g2, 1.0), float(M),
                                 (1.0 - g2 ** M) / (1.0 - g2))
        return self.q * cfg.dt * decay ** 2 * geometric

    def mean_phi1(self, cfg):
        return float(self.mean(cfg)[0]) * self.basis.integrals()[0]

    def second_moment(self, cfg):
        return math.fsum(self.mean(cfg) ** 2) + math.fsum(self.variance(cfg))
