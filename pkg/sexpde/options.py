"""Global module options.

Numerical knobs that apply to the whole package rather than to one run.
Per-run settings belong in the configuration file instead (see
``sexpde.config``).
"""


__all__ = ('options',)


class DefaultOptions(object):
    # Largest matrix ``dense_expm`` agrees to exponentiate.
    DENSE_EXPM_LIMIT = 2000

    # Exponential actions of operators up to this dimension are evaluated
    # densely unless a KrylovConfig says otherwise.
    DENSE_ACTION_CUTOFF = 300

    # Quadrature values held at once while projecting noise modes; the
    # modes are projected in column blocks of at most this many entries.
    PROJECTION_BLOCK = 2 ** 23


options = DefaultOptions()
