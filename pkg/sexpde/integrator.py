"""Stochastic exponential Euler time stepping.

One step maps ``X_m`` to

    X_{m+1} = exp(dt A_h) (X_m + B_h(X_m) dW_m) + dt phi_1(dt A_h) F(X_m)

The two exponential applications of the scheme are fused into one by
linearity of ``exp(dt A_h)``, so a step costs one exponential and one
``phi_1`` action.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NonFiniteStateError
from .matfunc import KrylovConfig, MatAction, expm_action, phi1_action
from .model import apply_diffusion, apply_drift
from .noise import sample_increment


__all__ = (
    'SchemeState', 'RunConfig', 'operator_action', 'step', 'simulate',
    'snapshot_rows',
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SchemeState:
    """``X_m^h`` at step ``m``; the time is derived, never accumulated."""
    m: int
    dt: float
    x: np.ndarray = field(repr=False)

    @property
    def t(self):
        return self.m * self.dt


@dataclass(frozen=True)
class RunConfig:
    """Time grid and output policy of one run.

    ``record`` is ``'none'``, ``'final'`` or a positive integer ``k`` to
    keep every ``k``-th state (plus the first and the last).
    """
    dt: float
    M_steps: int
    krylov: KrylovConfig = KrylovConfig()
    record: object = 'final'

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError('dt must be positive, got %r' % self.dt)
        if self.M_steps < 0 or int(self.M_steps) != self.M_steps:
            raise ValueError('M_steps must be a non-negative integer, got %r'
                             % self.M_steps)
        if self.record not in ('none', 'final') and not (
                isinstance(self.record, int) and self.record > 0):
            raise ValueError('record must be none, final or a positive '
                             'integer, got %r' % (self.record,))

    @classmethod
    def for_horizon(cls, T, M_steps, **kwargs):
        """Grid of ``M_steps`` steps of size ``T / M_steps``."""
        if M_steps < 1:
            raise ValueError('need at least one step, got %r' % M_steps)
        return cls(T / M_steps, M_steps, **kwargs)

    @property
    def T(self):
        return self.dt * self.M_steps

    def check_horizon(self, T):
        if abs(self.T - T) > 1e-14 * max(abs(T), 1.0):
            raise ValueError('dt * M_steps = %r does not match T = %r'
                             % (self.T, T))

    def keeps(self, m):
        if self.record == 'none':
            return False
        if m == self.M_steps:
            return True
        if self.record == 'final':
            return False
        return m % self.record == 0


def operator_action(ops):
    """The ``A_h`` action of ``ops``, shared by every run on them."""
    return ops.cached('action', lambda: MatAction.from_operators(ops))


def step(state, p, ops, dW, cfg, A=None):
    """Advance ``state`` by one step driven by the nodal increment ``dW``."""
    A = A or operator_action(ops)
    dt = state.dt
    x = state.x
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError('state is not finite', step=state.m)
    linear = x + apply_diffusion(p, x, dW, ops)
    x_new = expm_action(A, linear, dt, cfg.krylov)
    drift = apply_drift(p, x, ops)
    if drift.any():
        x_new = x_new + dt * phi1_action(A, drift, dt, cfg.krylov)
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteStateError('state became non-finite',
                                  step=state.m + 1)
    return SchemeState(state.m + 1, dt, x_new)


def simulate(p, ops, basis, spectrum, E, stream, r, cfg):
    """Run realization ``r`` over ``cfg.M_steps`` steps.

    Returns the final state and the list of recorded states. The increment
    of step ``m`` is ``sample_increment(stream, r, m, ...)``, so the result
    depends on ``(stream seed, r)`` only.
    """
    A = operator_action(ops)
    state = SchemeState(0, cfg.dt, p.X0.nodal(ops, E, basis))
    snapshots = [state] if cfg.keeps(0) else []
    zero = np.zeros(ops.dim)
    for m in range(cfg.M_steps):
        if spectrum.is_zero:
            dW = zero
        else:
            dW = sample_increment(stream, r, m, cfg.dt, spectrum, E)
        try:
            state = step(state, p, ops, dW, cfg, A)
        except NonFiniteStateError as e:
            raise NonFiniteStateError(e.detail, step=e.step or m,
                                      realization=r) from e
        if cfg.keeps(state.m):
            snapshots.append(state)
    log.debug('realization %d finished at t=%g', r, state.t)
    return state, snapshots


def snapshot_rows(states, ops):
    """Rows ``step, time, node_index, value`` over all mesh nodes."""
    for state in states:
        values = ops.expand(state.x)
        for k, value in enumerate(values):
            yield {'step': state.m, 'time': state.t, 'node_index': k,
                   'value': value}
