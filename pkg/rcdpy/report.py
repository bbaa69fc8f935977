"""Tools for organizing results for display"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


def pivot(records, row_field, column_field, value_field, fields):
    """
    Reshape (row key, column key, value) records into a two-dimensional
    table.

    For example, benchmark timings keyed by (nnz_a, nnz_x) become a
    table with one row per nnz_a and one column per nnz_x:

        nnz_a \\ nnz_x | 100   | 1000
        -----------------------------
        100000        | 0.021 | 0.020
        1000000       | 0.198 | 0.204

    Return (table, row keys, column keys) where the table maps (row
    key, column key) pairs to values and the keys are in order of first
    appearance.  Raise `ValueError` if a pair has more than one value.

    records: Iterable<Sequence<object>>
    fields: Sequence<str>
        Names of the fields of each record.
    """
    index = {name: idx for (idx, name) in enumerate(fields)}
    for name in (row_field, column_field, value_field):
        if name not in index:
            raise ValueError('Not among the fields {!r}: {!r}'
                             .format(tuple(fields), name))
    (r, c, v) = (index[row_field], index[column_field], index[value_field])
    rows = {}
    columns = {}
    table = {}
    for (num, record) in enumerate(records):
        if len(record) != len(fields):
            raise ValueError('Record {} does not match the fields {!r}: '
                             '{!r}'.format(num, tuple(fields), record))
        key = (record[r], record[c])
        if key in table:
            raise ValueError('Key {!r} has 2 values: {!r} {!r}'
                             .format(key, table[key], record[v]))
        rows[record[r]] = None
        columns[record[c]] = None
        table[key] = record[v]
    return (table, list(rows), list(columns))


def matrix_from(table, keys1, keys2, default=None):
    return [[table.get((k1, k2), default) for k2 in keys2]
            for k1 in keys1]


def format_cell(value, float_format='{:.6g}'):
    if value is None:
        return '-'
    if isinstance(value, float):
        return float_format.format(value)
    return str(value)


def format_table(header, rows, float_format='{:.6g}') -> str:
    """
    Format rows as a plain-text table with a rule under the header and
    columns separated by ` | `.  Numbers are right-aligned.
    """
    cells = [[format_cell(value, float_format) for value in row]
             for row in rows]
    header = [str(name) for name in header]
    widths = [max([len(header[col])] + [len(row[col]) for row in cells])
              for col in range(len(header))]
    numeric = [all(isinstance(row[col], (int, float)) or row[col] is None
                   for row in rows)
               for col in range(len(header))]

    def line(values):
        return ' | '.join(
            (value.rjust(width) if is_num else value.ljust(width))
            for (value, width, is_num) in zip(values, widths, numeric)
        ).rstrip()

    out = [line(header), '-' * (sum(widths) + 3 * (len(widths) - 1))]
    out.extend(line(row) for row in cells)
    return '\n'.join(out)


def pivot_table(records, row_field, column_field, value_field, fields,
                float_format='{:.6g}') -> str:
    """Pivot records and format the result."""
    (table, row_keys, col_keys) = pivot(
        records, row_field, column_field, value_field, fields)
    header = ['{} \\ {}'.format(row_field, column_field)] + col_keys
    rows = [[key] + values for (key, values) in zip(
        row_keys, matrix_from(table, row_keys, col_keys))]
    return format_table(header, rows, float_format)
