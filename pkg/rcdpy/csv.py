"""
Reading and writing the CSV tables rcdpy emits: solver traces, accuracy
traces, benchmark timings, and residual envelopes.

Every table has a fixed header.  Floats are written with 17 significant
digits so that they read back exactly, and missing values are empty
fields.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT License.  See LICENSE for
# details.


import csv

from . import files
from . import parse
from .solvers import TraceRow


TRACE_FIELDS = TraceRow._fields
"""`epoch,residual,f,psi,nnz,correct_nnz,incorrect_zeros,elapsed_s`"""

ACCURACY_FIELDS = ('epoch', 'train_accuracy', 'test_accuracy', 'nnz')
TIMING_FIELDS = ('nnz_a', 'nnz_x', 'seed', 'time_per_epoch')
ENVELOPE_FIELDS = ('nnz_a', 'nnz_x', 'epoch', 'mean', 'min', 'max', 'count')


def format_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return files.format_float(value)
    return str(value)


def parse_value(text: str):
    """Parse a field: empty is `None`, then int, float, or the text."""
    if text == '':
        return None
    if parse.is_int(text):
        return int(text)
    (value, err) = parse.float_err(text, allow_inf_nan=True)
    return text if err is not None else value


def write_table(file, fields, rows) -> None:
    """Write a header and rows of values in the order of `fields`."""
    with files.open_file(file, 'wt', newline='') as out:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(fields)
        for row in rows:
            if len(row) != len(fields):
                raise ValueError('Row has {} values, expected {}: {!r}'
                                 .format(len(row), len(fields), row))
            writer.writerow([format_value(value) for value in row])


def read_table(file, fields=None) -> list[tuple]:
    """
    Read a table written by `write_table` and return its rows as tuples
    of parsed values.  If `fields` is given, the header must match it.
    """
    source = files.source_name(file)
    with files.open_file(file, 'rt') as lines:
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None:
            raise parse.ParseError('Missing header', '', source, 1)
        if fields is not None and tuple(header) != tuple(fields):
            raise parse.ParseError('Unexpected header', ','.join(header),
                                   source, 1)
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise parse.ParseError(
                    'Expected {} fields'.format(len(header)), ','.join(row),
                    source, reader.line_num)
            rows.append(tuple(parse_value(text) for text in row))
    return rows


def write_trace(file, trace) -> None:
    write_table(file, TRACE_FIELDS, trace)


def read_trace(file) -> list[TraceRow]:
    return [TraceRow(*row) for row in read_table(file, TRACE_FIELDS)]
