"""Test the result table layer the reports are built on.
"""

import io

import pytest

import sexpde as tables
from sexpde.base import BaseTable


class TestTable(BaseTable):
    pass


def test_declaration():
    """
    Test defining tables by declaration.
    """

    class StudyTable(TestTable):
        h = tables.NumberColumn()
        error = tables.NumberColumn()

    assert len(StudyTable.base_columns) == 2
    assert 'h' in StudyTable.base_columns
    assert not hasattr(StudyTable, 'h')

    class TimedTable(StudyTable):
        dt = tables.NumberColumn()

    assert len(TimedTable.base_columns) == 3
    assert list(TimedTable.base_columns) == ['h', 'error', 'dt']

    # multiple inheritance
    class AddedMixin(TestTable):
        realizations = tables.IntegerColumn()

    class FullTable(StudyTable, AddedMixin):
        T = tables.NumberColumn()

    assert len(FullTable.base_columns) == 4
    assert 'realizations' in FullTable.base_columns


def test_sort():
    class MyUnsortedTable(TestTable):
        alpha  = tables.Column()  # noqa
        beta   = tables.Column()  # noqa
        n      = tables.Column()  # noqa

    test_data = [
        {'alpha': "mmm", 'beta': "mmm", 'n': 1},
        {'alpha': "aaa", 'beta': "zzz", 'n': 2},
        {'alpha': "zzz", 'beta': "aaa", 'n': 3},
    ]

    # various different ways to say the same thing: don't sort
    assert MyUnsortedTable(test_data).order_by == ()
    assert MyUnsortedTable(test_data, order_by=None).order_by == ()
    assert MyUnsortedTable(test_data, order_by=[]).order_by == ()

    # values of order_by are wrapped in tuples before being returned
    assert MyUnsortedTable([], order_by='alpha').order_by == ('alpha',)
    assert MyUnsortedTable([], order_by=('beta',)).order_by == ('beta',)

    class MySortedTable(MyUnsortedTable):
        class Meta:
            order_by = 'alpha'

    # order_by is inherited from the options if not explitly set
    table = MySortedTable(test_data)
    assert table.order_by == ('alpha',)
    # ...but can be overloaded at __init___
    assert MySortedTable(test_data, order_by='beta').order_by == ('beta',)
    # ...or reset to None (unsorted), ignoring the table default
    table = MySortedTable(test_data, order_by=None)
    assert table.order_by == ()
    assert table.rows[0]['n'] == 1


def test_memory_sort():
    class PointTable(tables.MemoryTable):
        id = tables.IntegerColumn()
        h = tables.NumberColumn()
        dt = tables.NumberColumn()
        study = tables.TextColumn()

    points = PointTable([
        {'id': 1, 'h': 0.25, 'dt': 0.5, 'study': 'time'},
        {'id': 2, 'h': 0.125, 'dt': 0.5, 'study': 'space'},
        {'id': 3, 'h': 0.25, 'dt': 0.25, 'study': 'space'},
        {'id': 4, 'h': 0.0625, 'dt': 0.125, 'study': 'time'},
    ])

    def check_order(order, result):
        points.order_by = order
        assert [p['id'] for p in points.rows] == result

    check_order(('h',), [4, 2, 1, 3])
    check_order(('-h',), [1, 3, 2, 4])
    check_order('-h,dt', [3, 1, 2, 4])
    check_order(('study', 'h'), [2, 3, 4, 1])
    check_order('-id', [4, 3, 2, 1])
    # the source list keeps its order
    assert [p['id'] for p in points._data] == [1, 2, 3, 4]

    # unknown columns are rejected
    with pytest.raises(ValueError):
        points.order_by = 'made-up-column'


def test_unsortable():
    class CheckTable(tables.MemoryTable):
        check = tables.TextColumn()
        value = tables.NumberColumn(sortable=True)

        class Meta:
            sortable = False

    table = CheckTable([{'check': 'b', 'value': 2.0},
                        {'check': 'a', 'value': 1.0}])
    with pytest.raises(ValueError):
        table.order_by = 'check'
    table.order_by = 'value'
    assert [row['check'] for row in table.rows] == ['a', 'b']


def test_render():
    class CheckTable(tables.MemoryTable):
        check = tables.TextColumn()
        value = tables.NumberColumn(digits=3)
        passed = tables.TextColumn()

        def render_passed(self, data):
            return data['passed'] and 'pass' or 'FAIL'

    table = CheckTable([{'check': 'a', 'value': 1.23456, 'passed': True},
                        {'check': 'b', 'value': 2.0, 'passed': False}])
    assert table.rows[0]['passed'] == 'pass'
    assert table.rows[1]['passed'] == 'FAIL'
    assert table.rows[0].formatted() == ['a', '1.23', 'pass']
    assert list(table.rows[1]) == ['b', 2.0, 'FAIL']


def test_column_count():
    class MyTable(TestTable):
        h = tables.Column()
        dt = tables.Column()

    # The columns container supports the len() builtin
    assert len(MyTable([]).columns) == 2
    assert 'dt' in MyTable([]).columns


def test_number_format():
    column = tables.NumberColumn()
    assert column.format(0.1) == '0.10000000000000001'
    assert float(column.format(1.0 / 3)) == 1.0 / 3
    assert column.format(None) == ''
    assert tables.IntegerColumn().format(7) == '7'


def test_csv_and_text():
    class PointTable(tables.MemoryTable):
        h = tables.NumberColumn()
        mc_std_error = tables.NumberColumn(verbose_name='MC std error')

    table = PointTable([{'h': 0.5, 'mc_std_error': 0.25}])
    out = io.StringIO()
    table.as_csv(out, comments=['seed = 1'])
    assert out.getvalue() == '# seed = 1\nh,mc_std_error\n0.5,0.25\n'
    text = table.as_text().splitlines()
    assert text[0].split() == ['H', 'MC', 'std', 'error']
    assert text[2].split() == ['0.5', '0.25']
