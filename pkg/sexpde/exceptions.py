"""Error types raised across the package.

Every error carries a ``module`` tag naming the part of the package that
raised it; ``str()`` prefixes the message with it so the command line can
report where a study point failed.
"""


__all__ = (
    'SexpdeError', 'ConfigError', 'MeshError', 'EllipticityError',
    'FactorizationError', 'KrylovConvergenceError', 'TraceClassError',
    'NonFiniteStateError', 'TruncationError', 'RateFitError',
)


class SexpdeError(Exception):
    module = 'sexpde'

    def __str__(self):
        return '[%s] %s' % (self.module, super(SexpdeError, self).__str__())


class ConfigError(SexpdeError, ValueError):
    module = 'config'

    def __init__(self, key, message):
        super(ConfigError, self).__init__('%s: %s' % (key, message))
        self.key = key


class MeshError(SexpdeError, ValueError):
    module = 'mesh'


class EllipticityError(SexpdeError, ValueError):
    module = 'fem'


class FactorizationError(SexpdeError):
    module = 'fem'


class KrylovConvergenceError(SexpdeError):
    """Raised when the exponential action cannot reach its tolerance.

    ``residual`` is the error estimate reached with the finest substep
    count that was tried.
    """
    module = 'matfunc'

    def __init__(self, message, residual):
        super(KrylovConvergenceError, self).__init__(
            '%s (achieved residual %.3e)' % (message, residual))
        self.residual = residual


class TraceClassError(SexpdeError, ValueError):
    module = 'noise'


class NonFiniteStateError(SexpdeError):
    module = 'integrator'

    def __init__(self, message, step=None, realization=None):
        super(NonFiniteStateError, self).__init__(
            '%s (realization %s, step %s)' % (message, realization, step))
        self.detail = message
        self.step = step
        self.realization = realization


class TruncationError(SexpdeError):
    module = 'reference'

    def __init__(self, message, tail):
        super(TruncationError, self).__init__(message)
        self.tail = tail


class RateFitError(SexpdeError, ValueError):
    module = 'experiments'
