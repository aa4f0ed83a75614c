"""Result tables written by the studies."""

import math

from . import columns
from .memory import MemoryTable


__all__ = (
    'ConvergenceTable', 'SnapshotTable', 'SelftestTable', 'ConvergenceReport',
)


class ConvergenceTable(MemoryTable):
    """One row per resolution of a convergence study, coarsest first."""
    study = columns.TextColumn()
    functional = columns.TextColumn()
    h = columns.NumberColumn()
    dt = columns.NumberColumn()
    T = columns.NumberColumn()
    realizations = columns.IntegerColumn()
    error = columns.NumberColumn()
    mc_std_error = columns.NumberColumn(verbose_name='MC std error')

    class Meta:
        order_by = ('-h', '-dt')


class SnapshotTable(MemoryTable):
    step = columns.IntegerColumn()
    time = columns.NumberColumn()
    node_index = columns.IntegerColumn()
    value = columns.NumberColumn()

    class Meta:
        sortable = False


class SelftestTable(MemoryTable):
    check = columns.TextColumn()
    value = columns.NumberColumn(digits=3)
    limit = columns.NumberColumn(digits=3)
    passed = columns.TextColumn(verbose_name='result')

    class Meta:
        sortable = False

    def render_passed(self, data):
        return data['passed'] and 'pass' or 'FAIL'


def _format_rate(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return 'undefined'
    return '%.17g' % value


class ConvergenceReport(object):
    """Points of a convergence study and the rate fitted to them.

    ``fitted_rate`` and ``rate_std_error`` are ``None`` when fewer than
    two points are statistically resolved; with exactly two the rate is
    defined but its standard error is not.
    """

    def __init__(self, study, points, fitted_rate, rate_std_error,
                 config=()):
        self.study = study
        self.points = list(points)
        self.fitted_rate = fitted_rate
        self.rate_std_error = rate_std_error
        self.config = list(config)

    @property
    def table(self):
        return ConvergenceTable(self.points)

    @property
    def resolved(self):
        return [p for p in self.points if p['error'] > 3 * p['mc_std_error']]

    def rate_line(self):
        return 'fitted_rate=%s std_error=%s' % (
            _format_rate(self.fitted_rate), _format_rate(self.rate_std_error))

    def as_csv(self):
        text = self.table.as_csv(comments=self.config)
        return text + '# %s\n' % self.rate_line()

    def write(self, path):
        with open(path, 'w') as f:
            f.write(self.as_csv())

    def __str__(self):
        return '%s\n%s' % (self.table.as_text(), self.rate_line())
