"""
Opening files transparently whether compressed, already open, or given
by name, and a plain-text codec for sparse vectors.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


import contextlib
import io
import pathlib

import numpy

from . import parse


def suffix(path) -> str:
    """Return the lowercase final suffix of a path without the dot."""
    return pathlib.PurePath(str(path)).suffix.lower().lstrip('.')


def compression_suffix(path) -> str | None:
    """Return the compression suffix of a path, or `None`."""
    sfx = suffix(path)
    if sfx in ('bz2', 'bzip2', 'xz', 'lzma', 'gz', 'z'):
        return sfx
    return None


def data_suffix(path) -> str:
    """Return the suffix naming the format, ignoring compression."""
    path = pathlib.PurePath(str(path))
    if compression_suffix(path) is not None:
        path = path.with_suffix('')
    return path.suffix.lower().lstrip('.')


def open_file(file, mode='rt', **opts):
    """
    Open a file given by name or path, decompressing or compressing
    according to its suffix, or wrap an already open stream.

    A stream is returned in a context that does not close it, so that
    callers can use `with` uniformly.
    """
    if isinstance(file, io.IOBase):
        text_stream = isinstance(file, io.TextIOBase)
        if text_stream and 'b' in mode:
            raise TypeError(
                'Text stream not compatible with binary mode: {}'
                .format(mode))
        if not text_stream and 't' in mode:
            raise TypeError(
                'Binary stream not compatible with text mode: {}'
                .format(mode))
        return contextlib.nullcontext(file)
    if not isinstance(file, (str, pathlib.PurePath)):
        raise TypeError('Not a filename or stream: {!r}'.format(file))
    path = str(file)
    sfx = compression_suffix(path)
    if sfx in ('bz2', 'bzip2'):
        import bz2
        return bz2.open(path, mode=mode, **opts)
    elif sfx in ('xz', 'lzma'):
        import lzma
        return lzma.open(path, mode=mode, **opts)
    elif sfx in ('gz', 'z'):
        import gzip
        return gzip.open(path, mode=mode, **opts)
    return open(path, mode=mode, **opts)


def source_name(file) -> str:
    """Return a name for a file or stream to use in error messages."""
    if isinstance(file, io.IOBase):
        return getattr(file, 'name', repr(file))
    return str(file)


def format_float(value: float) -> str:
    """Format a float with enough digits to read back exactly."""
    return '{:.17g}'.format(float(value))


def format_header_value(value) -> str:
    if isinstance(value, float):
        return format_float(value)
    return str(value)


##### Sparse Vectors #####


def write_sparse_vector(file, indices, values, header=None) -> None:
    """
    Write a sparse vector as text: optional `key value` header lines,
    then one `index value` line per entry.
    """
    with open_file(file, 'wt') as out:
        for (key, value) in (header or {}).items():
            if parse.is_int(str(key)) or parse.space_pattern.search(
                    str(key)):
                raise ValueError('Bad header key: {!r}'.format(key))
            out.write('{} {}\n'.format(key, format_header_value(value)))
        for (idx, val) in zip(indices, values):
            out.write('{} {}\n'.format(int(idx), format_float(val)))


def read_sparse_vector(file) -> tuple[dict, numpy.ndarray, numpy.ndarray]:
    """
    Read a sparse vector written by `write_sparse_vector`.  Return
    (header, indices, values).  Header values are parsed as numbers
    where possible.  Lines starting with `#` and blank lines are
    skipped.

    Raises `ParseError` with the line number on bad lines.
    """
    source = source_name(file)
    header = {}
    indices = []
    values = []
    with open_file(file, 'rt') as lines:
        for (line_num, line) in enumerate(lines, start=1):
            text = line.strip()
            if not text or text.startswith('#'):
                continue
            fields = parse.space_pattern.split(text, maxsplit=1)
            if len(fields) != 2:
                raise parse.ParseError(
                    'Expected two fields', text, source, line_num)
            (key, value) = fields
            if not parse.is_int(key):
                if indices:
                    raise parse.ParseError(
                        'Header line after data', text, source, line_num)
                (header[key], _) = parse.cli_atom_err(value, value)
                continue
            (val, err) = parse.float_err(value)
            if err is not None:
                raise err.at(source, line_num)
            indices.append(int(key))
            values.append(val)
    return (header,
            numpy.array(indices, dtype=numpy.int64),
            numpy.array(values, dtype=float))
