__all__ = (
    'Column', 'TextColumn', 'IntegerColumn', 'NumberColumn',
)


class Column(object):
    """Represents a single column of a result table.

    ``verbose_name`` defines a display name for this column used for text
    output; CSV headers always use the declared name. The row data holds
    the column's value under the declared name.

    Setting ``sortable`` to False will result in this column being unusable
    in ordering.
    """

    # Tracks each time a Column instance is created. Used to retain order.
    creation_counter = 0

    def __init__(self, verbose_name=None, sortable=None):
        self.verbose_name = verbose_name
        self.sortable = sortable

        self.creation_counter = Column.creation_counter
        Column.creation_counter += 1

    def format(self, value):
        """Render a cell value as text."""
        if value is None:
            return ''
        return str(value)


class TextColumn(Column):
    pass


class IntegerColumn(Column):
    def format(self, value):
        if value is None:
            return ''
        return '%d' % value


class NumberColumn(Column):
    """Floating point values, printed with 17 significant digits so that
    they read back bit for bit."""

    def __init__(self, *args, **kwargs):
        self.digits = kwargs.pop('digits', 17)
        super(NumberColumn, self).__init__(*args, **kwargs)

    def format(self, value):
        if value is None:
            return ''
        return '%.*g' % (self.digits, value)
