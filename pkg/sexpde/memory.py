from .base import BaseTable


__all__ = ('MemoryTable',)


def sort_table(data, order_by):
    """Sort a list of dicts in place by the keys in ``order_by``; a ``-``
    prefix sorts that key descending.
    """
    # stable sorts, least significant key first
    for o in reversed(list(order_by)):
        reverse = o.startswith('-')
        name = reverse and o[1:] or o
        data.sort(key=lambda row: row.get(name), reverse=reverse)


class MemoryTable(BaseTable):
    """Table over a list of dicts held in memory."""

    def _build_snapshot(self):
        """Copy the rows and sort the copy."""
        self._columns._reset()
        self._rows._reset()

        snapshot = list(self._data)
        if self.order_by:
            sort_table(snapshot, self.order_by)
        return snapshot
