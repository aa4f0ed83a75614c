"""Problem definitions: linear operator, drift, diffusion, initial value.

Drift and diffusion are pointwise (Nemytskii) maps evaluated at the mesh
nodes: ``(F(v))_k = f(x_k, v_k)`` and ``(B(v) dW)_k = b(x_k, v_k) dW_k``.
Both callables take an ``(n, 2)`` array of points and an ``(n,)`` array of
values and return an ``(n,)`` array.
"""

import logging

import numpy as np

from .exceptions import NonFiniteStateError
from .fem import BoundaryKind, OperatorCoefficients, l2_project, project_field


__all__ = (
    'Additive', 'Multiplicative', 'InitialValue', 'SpdeProblem',
    'apply_drift', 'apply_diffusion', 'check_lipschitz', 'presets',
    'linear2d', 'multiplicative_demo',
)

log = logging.getLogger(__name__)


class Additive(object):
    """``B = Q^{1/2}``: the sampled increment is used as is."""

    multiplicative = False

    def __repr__(self):
        return 'Additive()'


class Multiplicative(object):
    multiplicative = True

    def __init__(self, b):
        self.b = b

    def __repr__(self):
        return 'Multiplicative(%r)' % (self.b,)


class InitialValue(object):
    """``X_0`` given either by spectral coefficients or pointwise.

    ``coefficients`` is a callable ``(i, j) -> <e_{i,j}, X_0>``; modes
    beyond the retained basis are dropped. ``function`` is a pointwise
    ``f(x, y)`` that gets L2-projected.
    """

    def __init__(self, coefficients=None, function=None, name=None):
        if (coefficients is None) == (function is None):
            raise ValueError('give exactly one of coefficients or function')
        self.coefficients = coefficients
        self.function = function
        self.name = name

    @property
    def spectral(self):
        return self.coefficients is not None

    def spectral_coefficients(self, basis):
        if not self.spectral:
            raise ValueError('initial value %s has no spectral form'
                             % self.name)
        return basis.coefficients(self.coefficients)

    def nodal(self, ops, E=None, basis=None):
        """``P_h X_0`` as a nodal vector."""
        if self.spectral:
            if E is None or basis is None:
                raise ValueError('spectral initial values need the mode '
                                 'matrix and its basis')
            return E @ self.spectral_coefficients(basis)
        return l2_project(ops, self.function)

    @classmethod
    def zero(cls):
        return cls(coefficients=lambda i, j: 0.0, name='zero')

    @classmethod
    def mode(cls, i, j, amplitude=1.0):
        return cls(coefficients=lambda a, b: amplitude * (a == i and b == j),
                   name='mode%d%d' % (i, j))

    @classmethod
    def smooth(cls, exponent=1.001, offset=0.0):
        """``sum_{i,j >= 1} (i^2 + j^2)^-exponent e_{i,j}``, plus ``offset``
        times the constant mode."""
        def coefficient(i, j):
            if i == 0 and j == 0:
                return offset
            if i < 1 or j < 1:
                return 0.0
            return float(i * i + j * j) ** -exponent
        return cls(coefficients=coefficient,
                   name=offset and 'smooth-offset' or 'smooth')

    def __repr__(self):
        return '<InitialValue %s>' % (self.name or 'custom')


class SpdeProblem(object):
    """``dX = (A X + F(X)) dt + B(X) dW`` on a rectangle.

    ``reaction`` is the constant ``c`` of a linear drift ``f(x, u) = -c u``
    when the problem has one; the closed-form reference needs it. The
    ``lipschitz`` budget is spot-checked with a warning only.
    """

    def __init__(self, coeffs, bc, drift, diffusion, X0, T, name=None,
                 reaction=None, lipschitz=None, project_drift=False):
        self.coeffs = coeffs
        self.bc = bc
        self.drift = drift
        self.diffusion = diffusion
        self.X0 = X0
        self.T = T
        self.name = name
        self.reaction = reaction
        self.lipschitz = lipschitz
        self.project_drift = project_drift

    @property
    def diffusivity(self):
        """Scalar diffusion coefficient of an isotropic tensor."""
        D = self.coeffs.tensor
        if D[0, 1] != 0 or D[1, 0] != 0 or D[0, 0] != D[1, 1]:
            raise ValueError('diffusion tensor is not isotropic')
        return float(D[0, 0])

    @property
    def is_linear_benchmark(self):
        return (self.reaction is not None and
                not self.diffusion.multiplicative and
                self.bc == BoundaryKind.NEUMANN and
                not np.any(self.coeffs.velocity) and
                self.X0.spectral)

    def __repr__(self):
        return '<SpdeProblem %s, %s, T=%g>' % (
            self.name or 'custom', self.diffusion, self.T)


def _finite(values, what):
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values))
        raise NonFiniteStateError('%s is not finite at %d node(s), first %d'
                                  % (what, bad.shape[0], bad[0]))
    return values


def apply_drift(p, x, ops):
    """``F(x)`` at the nodes, or ``P_h F(x)`` if the problem asks for it."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != ops.dim:
        raise ValueError('state has %d entries, operators have %d dofs'
                         % (x.shape[0], ops.dim))
    if p.project_drift:
        values = project_field(ops, p.drift, x)
    else:
        values = np.asarray(p.drift(ops.points, x), dtype=float)
    return _finite(values, 'drift')


def apply_diffusion(p, x, dW, ops):
    """``B(x) dW`` at the nodes."""
    if not p.diffusion.multiplicative:
        return dW
    b = np.asarray(p.diffusion.b(ops.points, x), dtype=float)
    return _finite(b, 'diffusion coefficient') * dW


def check_lipschitz(p, domain=(1.0, 1.0), samples=256, spread=10.0, seed=0):
    """Spot-check ``|f(x,u) - f(x,v)| <= L |u - v|`` on random samples.

    Returns True when no sample violates the budget; violations are
    logged as warnings. Problems without a budget pass trivially.
    """
    if p.lipschitz is None:
        return True
    rng = np.random.default_rng(seed)
    pts = rng.uniform((0.0, 0.0), domain, size=(samples, 2))
    u = rng.uniform(-spread, spread, samples)
    v = rng.uniform(-spread, spread, samples)
    lhs = np.abs(np.asarray(p.drift(pts, u)) - np.asarray(p.drift(pts, v)))
    rhs = p.lipschitz * np.abs(u - v) * (1 + 1e-12)
    bad = lhs > rhs
    if bad.any():
        log.warning('drift of %r exceeds Lipschitz budget %g on %d of %d '
                    'samples', p, p.lipschitz, bad.sum(), samples)
        return False
    return True


def _linear_drift(c):
    def drift(points, u):
        return -c * u
    return drift


def _bounded_diffusion(points, u):
    return u / (1.0 + u * u)


def _problem(name, diffusion, X0, D, reaction, T, shift, advection, bc,
             alpha0, project_drift):
    coeffs = OperatorCoefficients.isotropic(
        D, q_adv=tuple(advection), alpha0=alpha0, shift=shift)
    return SpdeProblem(coeffs, bc, _linear_drift(reaction), diffusion, X0, T,
                       name=name, reaction=reaction, lipschitz=abs(reaction),
                       project_drift=project_drift)


def linear2d(D=0.1, reaction=0.5, X0=None, T=1.0, shift=0.0,
             advection=(0.0, 0.0), bc=BoundaryKind.NEUMANN, alpha0=0.0,
             project_drift=False):
    """``dX = (D Laplace X - reaction X) dt + dW``, Neumann by default."""
    return _problem('linear2d', Additive(),
                    X0 if X0 is not None else InitialValue.zero(),
                    D, reaction, T, shift, advection, bc, alpha0,
                    project_drift)


def multiplicative_demo(D=0.1, reaction=0.5, X0=None, T=1.0, shift=0.0,
                        advection=(0.0, 0.0), bc=BoundaryKind.NEUMANN,
                        alpha0=0.0, project_drift=False):
    """As ``linear2d`` but with ``b(x, u) = u / (1 + u^2)``."""
    return _problem('multiplicative-demo', Multiplicative(_bounded_diffusion),
                    X0 if X0 is not None else InitialValue.smooth(),
                    D, reaction, T, shift, advection, bc, alpha0,
                    project_drift)


presets = {
    'linear2d': linear2d,
    'multiplicative-demo': multiplicative_demo,
}
