"""Declarative result tables.

A table class lists its columns as ``Column`` attributes; rows are plain
mappings. Tables know how to order their rows and how to write them as
CSV or as aligned text, which is all the reports need.
"""

import copy
import csv
import io
from collections import OrderedDict

from .columns import Column


__all__ = ('BaseTable',)


class TableOptions(object):
    def __init__(self, options=None):
        self.sortable = getattr(options, 'sortable', None)
        self.order_by = getattr(options, 'order_by', None)


class DeclarativeColumnsMetaclass(type):
    """
    Collects ``Column`` attributes into an ordered ``base_columns``,
    appending them to the columns of any parent tables.
    """
    def __new__(cls, name, bases, attrs):
        columns = [
            (column_name, attrs.pop(column_name))
            for column_name, obj in list(attrs.items())
            if isinstance(obj, Column)
        ]
        columns.sort(key=lambda x: x[1].creation_counter)

        # bases in reverse, so the first base ends up first
        for base in bases[::-1]:
            if hasattr(base, 'base_columns'):
                columns = list(base.base_columns.items()) + columns
        attrs['base_columns'] = OrderedDict(columns)

        attrs['_meta'] = TableOptions(attrs.get('Meta', None))
        return type.__new__(cls, name, bases, attrs)


def rmprefix(s):
    """Column name without its ``-`` sort prefix."""
    return s[1:] if s[:1] == '-' else s


class Columns(object):
    """The ``columns`` of a table instance, as ``BoundColumn`` objects."""
    def __init__(self, table):
        self.table = table
        self._columns = OrderedDict()

    def _reset(self):
        self._columns = OrderedDict()

    def _spawn_columns(self):
        # ``base_columns`` may have changed since the last call
        self._columns = OrderedDict(
            (name, self._columns.get(name) or
             BoundColumn(self.table, column, name))
            for name, column in self.table.base_columns.items())

    def all(self):
        self._spawn_columns()
        return list(self._columns.values())

    def __iter__(self):
        return iter(self.all())

    def __contains__(self, name):
        self._spawn_columns()
        return name in self._columns

    def __len__(self):
        return len(self.all())

    def __getitem__(self, name):
        self._spawn_columns()
        return self._columns[name]


class BoundColumn(object):
    """A ``Column`` bound to one table instance."""

    def __init__(self, table, column, declared_name):
        self.table = table
        self.column = column
        self.declared_name = declared_name

    name = property(lambda s: s.declared_name)

    @property
    def sortable(self):
        if self.column.sortable is not None:
            return self.column.sortable
        if self.table._meta.sortable is not None:
            return self.table._meta.sortable
        return True

    def __str__(self):
        s = self.column.verbose_name or self.name.replace('_', ' ')
        return s[:1].upper() + s[1:]


class BoundRow(object):
    """One row of data, read through the table's columns.

    ``row[name]`` goes through a ``render_<name>`` method of the table
    when there is one.
    """
    def __init__(self, table, data):
        self.table = table
        self.data = data

    def __getitem__(self, name):
        column = self.table.columns[name]
        render = getattr(self.table, 'render_%s' % name, None)
        if render:
            return render(self.data)
        return self.data[column.name]

    @property
    def values(self):
        return [self[column.name] for column in self.table.columns]

    def __iter__(self):
        return iter(self.values)

    def formatted(self):
        """Cell texts of the columns."""
        return [column.column.format(self[column.name])
                for column in self.table.columns]


class Rows(object):
    """The ``rows`` of a table instance, in table order."""

    row_class = BoundRow

    def __init__(self, table):
        self.table = table

    def _reset(self):
        pass

    def __iter__(self):
        for row in self.table.data:
            yield self.row_class(self.table, row)

    def __len__(self):
        return len(self.table.data)

    def __getitem__(self, index):
        return self.row_class(self.table, self.table.data[index])


class BaseTable(metaclass=DeclarativeColumnsMetaclass):
    """
    Columns plus the data rows they are read from.
    """

    rows_class = Rows

    # "use the Meta ordering", as opposed to None for "do not sort"
    DefaultOrder = type('DefaultSortType', (), {})()

    def __init__(self, data, order_by=DefaultOrder):
        """
        ``data`` is a list of mappings. Without ``order_by`` the ordering
        of the table's ``Meta`` applies.

        Instances get their own copy of ``base_columns``.
        """
        self._data = data
        self._snapshot = None
        self._rows = self.rows_class(self)
        self._columns = Columns(self)
        self.base_columns = copy.deepcopy(type(self).base_columns)

        if order_by is BaseTable.DefaultOrder:
            self.order_by = self._meta.order_by
        else:
            self.order_by = order_by

    def _build_snapshot(self):
        """The rows in output order; subclasses sort them."""
        return self._data

    @property
    def data(self):
        if self._snapshot is None:
            self._snapshot = self._build_snapshot()
        return self._snapshot

    def _set_order_by(self, value):
        self._snapshot = None
        if isinstance(value, str):
            value = value.split(',')
        validated = []
        for o in value or ():
            name = rmprefix(o)
            if name in self.columns and self.columns[name].sortable:
                validated.append(o)
            else:
                raise ValueError('Column name %s is invalid.' % o)
        self._order_by = tuple(validated)

    order_by = property(lambda s: s._order_by, _set_order_by)

    columns = property(lambda s: s._columns)
    rows = property(lambda s: s._rows)

    def __iter__(self):
        return iter(self.rows)

    def __str__(self):
        return self.as_text()

    def as_csv(self, stream=None, comments=()):
        """Write the table as CSV, preceded by ``# `` comment lines.

        Returns the text when no ``stream`` is given.
        """
        out = stream if stream is not None else io.StringIO()
        for line in comments:
            out.write('# %s\n' % line)
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow([column.name for column in self.columns])
        for row in self.rows:
            writer.writerow(row.formatted())
        if stream is None:
            return out.getvalue()

    def as_text(self):
        """Render an aligned plain-text table."""
        header = [str(column) for column in self.columns]
        body = [row.formatted() for row in self.rows]
        widths = [max([len(h)] + [len(r[i]) for r in body])
                  for i, h in enumerate(header)]
        lines = ['  '.join(h.ljust(w) for h, w in zip(header, widths)),
                 '  '.join('-' * w for w in widths)]
        for r in body:
            lines.append('  '.join(c.ljust(w) for c, w in zip(r, widths)))
        return '\n'.join(lines)
