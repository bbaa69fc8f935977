"""
Parsing of the text that rcdpy reads: command-line values, config file
lines, sparse entries (`index:value` in LIBSVM data, `index value` in
vector files), and weighted mixtures.

The parsers do not raise to say that text is malformed.  They return a
(value, error) pair where `error` is `None` on success, and the caller
raises the error, usually after locating it with `ParseError.at`.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See LICENSE for
# details.


from collections.abc import Callable
import builtins
import re


Parser = Callable[[str], tuple[object, Exception | None]]
"""f(text) -> (value, error)"""


##### Errors #####


class ParseError(Exception):
    """Malformed text, optionally located by source, line, and column."""

    def __init__(self, message, bad_text, source=None, line=None,
                 column=None, **kwds):
        super().__init__(message, bad_text, source, line, column)
        self.message = message
        self.bad_text = bad_text
        self.source = source
        self.line = line
        self.column = column

    def at(self, source=None, line=None):
        """Locate this error (where not `None`) and return it."""
        if source is not None:
            self.source = source
        if line is not None:
            self.line = line
        return self

    def __str__(self):
        where = [
            fmt.format(value) for (fmt, value) in (
                ('{}', self.source),
                ('line {}', self.line),
                ('col {}', self.column),
            ) if value is not None
        ]
        return ''.join(part + ': ' for part in where) + '{}: {!r}'.format(
            self.message, self.bad_text)


class SequenceParseError(ParseError):
    """Error in the item at `index` of a separated list."""

    def __init__(self, message, bad_text, index=None, **kwds):
        super().__init__(message, bad_text, **kwds)
        self.index = index

    @classmethod
    def wrap(cls, error: ParseError, index: int):
        return cls(error.message, error.bad_text, index,
                   source=error.source, line=error.line,
                   column=error.column)

    def __str__(self):
        text = super().__str__()
        return text if self.index is None else 'index {}: {}'.format(
            self.index, text)


##### Patterns #####


integer_pattern = re.compile(r'[+-]?\d+')
"""Pattern that matches integers"""

_digits = r'\d+'
_exp = r'(?:[eE][+-]?\d+)'
# A float has a point or an exponent or both; integers do not match.
# Each alternative commits at its first character to avoid backtracking.
float_pattern = re.compile(
    rf'[+-]?(?:{_digits}(?:\.\d*{_exp}?|{_exp})|\.{_digits}{_exp}?)')
"""Pattern that matches floats written with a point or an exponent"""

inf_nan_pattern = re.compile(r'[+-]?(?:inf|infinity|nan)', re.IGNORECASE)

_true_pattern = re.compile(r'true|yes|on', re.IGNORECASE)
_false_pattern = re.compile(r'false|no|off', re.IGNORECASE)

name_pattern = re.compile(r'[a-zA-Z_][\w-]*')
"""Pattern that matches identifiers such as option and bound names"""


def mk_split_pattern(separator: str, allow_surrounding_whitespace=True):
    """Return a pattern that splits on `separator`."""
    regex = re.escape(separator)
    if allow_surrounding_whitespace:
        regex = r'\s*' + regex + r'\s*'
    return re.compile(regex)


comma_split_pattern = mk_split_pattern(',')
colon_split_pattern = mk_split_pattern(':')
space_pattern = re.compile(r'\s+')

config_line_pattern = re.compile(
    r'\s*(' + name_pattern.pattern + r')\s*=\s*(.*?)\s*')
"""Pattern that matches a `key = value` config line"""


##### Atoms #####


def is_int(text: str) -> builtins.bool:
    return integer_pattern.fullmatch(text.strip()) is not None


def _is_float_literal(text, allow_inf_nan):
    return (float_pattern.fullmatch(text) is not None
            or integer_pattern.fullmatch(text) is not None
            or (allow_inf_nan and inf_nan_pattern.fullmatch(text)
                is not None))


def int_err(text: str) -> tuple[builtins.int | None, ParseError | None]:
    """Parse an integer."""
    if not is_int(text):
        return (None, ParseError('Cannot parse an integer from', text))
    return (builtins.int(text), None)


def float_err(text: str, allow_inf_nan: builtins.bool=False):
    """
    Parse a float (integers included).  Infinities and NaNs are errors
    unless allowed since none of the numbers rcdpy reads can be one.
    """
    if not _is_float_literal(text.strip(), allow_inf_nan):
        return (None, ParseError('Cannot parse a float from', text))
    return (builtins.float(text), None)


def bool_err(text: str) -> tuple[builtins.bool | None, ParseError | None]:
    """Parse true/false, yes/no, or on/off in any case."""
    word = text.strip()
    if _true_pattern.fullmatch(word):
        return (True, None)
    if _false_pattern.fullmatch(word):
        return (False, None)
    return (None, ParseError('Cannot parse a boolean from', text))


def cli_atom_err(text: str, default: object=None):
    """
    Parse a command-line atom as an int, a float (infinities and NaNs
    allowed), or a bool, trying in that order.  Return (value, None), or
    (`default`, error) for text that is none of these.
    """
    for parser in (int_err, lambda t: float_err(t, True), bool_err):
        (value, err) = parser(text)
        if err is None:
            return (value, None)
    return (default, ParseError('Cannot parse a CLI atom from', text))


##### Compound Literals #####


def cli_list_err(text: str, parse_item: Parser=None,
                 split_pattern: re.Pattern=comma_split_pattern):
    """
    Parse a separated list such as `1,10,100`; empty text is [].  On
    error, return the items parsed so far and a `SequenceParseError`.
    """
    text = text.strip()
    items = []
    if not text:
        return (items, None)
    for (index, piece) in enumerate(split_pattern.split(text)):
        if parse_item is None:
            items.append(piece)
            continue
        (item, err) = parse_item(piece)
        if err is not None:
            return (items, SequenceParseError.wrap(err, index))
        items.append(item)
    return (items, None)


def cli_kv_pair_err(text: str, parse_key: Parser=None,
                    parse_val: Parser=None,
                    split_pattern: re.Pattern=colon_split_pattern):
    """Parse a `key:value` pair, splitting at the first separator."""
    pieces = split_pattern.split(text.strip(), maxsplit=1)
    if len(pieces) < 2:
        return (None, ParseError(
            'Unable to split into a key and a value', text))
    pair = []
    for (piece, parser) in zip(pieces, (parse_key, parse_val)):
        if parser is not None:
            (piece, err) = parser(piece)
            if err is not None:
                return (None, err)
        pair.append(piece)
    return (tuple(pair), None)


def mixture_err(text: str) -> tuple[list[tuple[float, float]], Exception]:
    """
    Parse a weighted mixture `w1:v1,w2:v2,...` of values with positive
    weights summing to 1, e.g. `0.98:1e-6,0.02:1e3`.
    """
    def parse_item(piece):
        return cli_kv_pair_err(piece, float_err, float_err)
    (pairs, err) = cli_list_err(text, parse_item)
    if err is not None:
        return (None, err)
    if not pairs:
        return (None, ParseError('Empty mixture', text))
    if any(weight <= 0 for (weight, _) in pairs):
        return (None, ParseError('Mixture weights must be positive', text))
    total = builtins.sum(weight for (weight, _) in pairs)
    if abs(total - 1) > 1e-9:
        return (None, ParseError('Mixture weights must sum to 1', text))
    return (pairs, None)


def config_line_err(text: str) -> tuple[tuple[str, str] | None, ParseError]:
    """
    Parse a config file line.  Return ((key, value text), None) for a
    `key = value` line, (None, None) for a blank or comment line, and
    (None, error) otherwise.
    """
    txt = text.split('#', 1)[0]
    if len(txt.strip()) == 0:
        return (None, None)
    match = config_line_pattern.fullmatch(txt)
    if match is None:
        return (None, ParseError('Not a `key = value` line', text.rstrip()))
    return (match.groups(), None)


##### Sparse Entries #####


def index_value_err(
        text: str, split_pattern: re.Pattern=colon_split_pattern,
) -> tuple[tuple[builtins.int, builtins.float], ParseError]:
    """Parse an `index:value` entry (or one with another separator)."""
    pieces = split_pattern.split(text.strip(), maxsplit=1)
    if len(pieces) != 2:
        return (None, ParseError('Not an index-value pair', text))
    (idx, err) = int_err(pieces[0])
    if err is not None:
        return (None, err)
    (val, err) = float_err(pieces[1])
    if err is not None:
        return (None, err)
    return ((idx, val), None)


def libsvm_line_err(text: str) -> tuple[tuple, ParseError]:
    """
    Parse a LIBSVM data line `label idx:val idx:val ...`.

    Return ((label, indices, values), None) with the indices as given
    (1-based).  Indices need not be increasing but must be distinct.
    Trailing comments after `#` are ignored.
    """
    tokens = text.split('#', 1)[0].split()
    if not tokens:
        return (None, ParseError('Missing label', text.rstrip()))
    (label, err) = float_err(tokens[0])
    if err is not None:
        return (None, ParseError('Bad label', tokens[0]))
    indices = []
    values = []
    for token in tokens[1:]:
        (pair, err) = index_value_err(token)
        if err is not None:
            return (None, ParseError('Bad feature', token))
        if pair[0] < 1:
            return (None, ParseError('Feature indices start at 1', token))
        indices.append(pair[0])
        values.append(pair[1])
    if len(set(indices)) != len(indices):
        return (None, ParseError('Duplicate feature index', text.rstrip()))
    return ((label, indices, values), None)
