"""
Command-line arguments and config files.

`parse` splits argument tokens into keyword and positional arguments.
An `Option` `Schema` then converts and validates the keyword arguments
together with the `key = value` lines of an optional config file, so
that every subcommand documents its keys, types, and defaults in one
place.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


import collections
import re

from . import files
from . import parse as parselib


long_option_pattern = re.compile(r'--([^=\s]+)(?:\s*=\s*(.*))?')


class UsageError(Exception):
    """Bad command-line arguments or config file keys."""


def parse(
        args,
        kv_pattern=long_option_pattern,
        value_parser=None,
        value_if_unspecified=True,
        args_separator='--',
        reduce_values=None,
):
    """
    Parse the given iterable of argument tokens into a dictionary of
    keyword arguments, each key mapping to the list of its values in
    order, and a list of positional arguments.

    A key takes its value from the same token (`--key=val`) or from the
    next token (`--key val`) unless that token is another key, in which
    case the value is `value_if_unspecified`.  Thus flags must precede
    other keys or use the assignment style so as not to consume a
    positional argument.  Tokens after `args_separator` are positional.
    For example,

        solve --trace-every 5 --exact-blocks --seed=3 -- --odd

    parses into

        {'trace-every': ['5'], 'exact-blocks': [True], 'seed': ['3']}
        ['solve', '--odd']

    `value_parser`: f(str) -> object
        Converts each value token, e.g. `parse_atom`.
    `reduce_values`: f(key: str, vals: list) -> value
        Post-processes each list of values, e.g. `pick_last_value`.
    """
    kw_args = collections.defaultdict(list)
    idx_args = []
    keys_enabled = True
    awaiting = None
    for arg in args:
        if keys_enabled and arg == args_separator:
            keys_enabled = False
            continue
        match = kv_pattern.fullmatch(arg) if keys_enabled else None
        if match is None:
            val = arg if value_parser is None else value_parser(arg)
            if awaiting is not None:
                kw_args[awaiting].append(val)
                awaiting = None
            else:
                idx_args.append(val)
            continue
        if awaiting is not None:
            kw_args[awaiting].append(value_if_unspecified)
        (key, val) = match.groups()
        if val is None:
            awaiting = key
        else:
            awaiting = None
            kw_args[key].append(val if value_parser is None
                                else value_parser(val))
    if awaiting is not None:
        kw_args[awaiting].append(value_if_unspecified)
    if reduce_values is not None:
        return ({k: reduce_values(k, v) for (k, v) in kw_args.items()},
                idx_args)
    return (dict(kw_args), idx_args)


def pick_last_value(key, vals):
    """Pick the last of the values given for a key."""
    return vals[-1]


def parse_atom(text):
    """
    Parse the given text as an int, float, or bool if possible.
    Otherwise just return the text.  Useful as a "value parser" for
    `parse`.
    """
    (obj, err) = parselib.cli_atom_err(text)
    return obj if err is None else text


##### Options #####


def _convert_bool(value):
    if isinstance(value, bool):
        return (value, None)
    return parselib.bool_err(value)


def _convert_str(value):
    if value is True:
        return (None, parselib.ParseError('Missing value', ''))
    return (str(value), None)


def _convert_number(parser):
    def convert(value):
        if value is True:
            return (None, parselib.ParseError('Missing value', ''))
        return parser(value)
    return convert


def _convert_list(parser):
    def convert(value):
        if value is True:
            return (None, parselib.ParseError('Missing value', ''))
        return parselib.cli_list_err(value, parser)
    return convert


_converters = {
    'int': _convert_number(parselib.int_err),
    'float': _convert_number(parselib.float_err),
    'bool': _convert_bool,
    'str': _convert_str,
    'int-list': _convert_list(parselib.int_err),
    'float-list': _convert_list(parselib.float_err),
}


class Option:
    """
    A named option of a subcommand with its type (`int`, `float`,
    `bool`, `str`, `int-list`, or `float-list`), default, allowed
    values, and help text.
    """

    def __init__(self, name, type='str', default=None, help='',
                 choices=None, required=False):
        if type not in _converters:
            raise ValueError('Unknown option type: {!r}'.format(type))
        self.name = name
        self.type = type
        self.default = default
        self.help = help
        self.choices = None if choices is None else tuple(choices)
        self.required = required

    @property
    def attribute(self):
        """Name as a Python identifier: dashes become underscores."""
        return self.name.replace('-', '_')

    def convert(self, value):
        """Convert a token or config value, raising `UsageError`."""
        (converted, err) = _converters[self.type](value)
        if err is not None:
            hint = ''
            if self.type == 'bool':
                hint = (' (give flags as `--{}=true` when a positional '
                        'argument follows)'.format(self.name))
            raise UsageError('Bad value for --{}: {}{}'.format(
                self.name, err, hint))
        if self.choices is not None and converted not in self.choices:
            raise UsageError('Bad value for --{}: {!r} (expected one of: '
                             '{})'.format(self.name, converted,
                                          ', '.join(self.choices)))
        return converted

    def usage(self, width=24):
        left = '--{}'.format(self.name)
        if self.type != 'bool':
            left += ' <{}>'.format(self.type)
        text = self.help
        if self.choices is not None:
            text += ' ({})'.format('|'.join(self.choices))
        if self.default is not None:
            text += ' [default: {}]'.format(self.default)
        elif self.required:
            text += ' [required]'
        return '  {}  {}'.format(left.ljust(width), text)


class Schema:
    """The options of a subcommand."""

    def __init__(self, name, options, description=''):
        self.name = name
        self.description = description
        self.options = {option.name: option for option in options}
        if len(self.options) != len(options):
            raise ValueError('Duplicate option names in {}'.format(name))

    def resolve(self, kw_args, file_values=None) -> dict:
        """
        Return the value of every option as a dictionary keyed by
        attribute name: from the flags if given there, else from the
        config file values, else the default.

        Raise `UsageError` for unknown keys and missing required
        options.
        """
        file_values = file_values or {}
        for (source, keys) in (('option', kw_args), ('config key',
                                                      file_values)):
            unknown = sorted(set(keys) - set(self.options))
            if unknown:
                raise UsageError('Unknown {}s for `{}`: {}'.format(
                    source, self.name, ', '.join(unknown)))
        values = {}
        for option in self.options.values():
            if option.name in kw_args:
                raw = kw_args[option.name]
                if isinstance(raw, list):
                    raw = raw[-1]
                value = option.convert(raw)
            elif option.name in file_values:
                value = option.convert(file_values[option.name])
            elif option.required:
                raise UsageError('Missing required option for `{}`: --{}'
                                 .format(self.name, option.name))
            else:
                value = option.default
            values[option.attribute] = value
        return values

    def usage(self) -> str:
        lines = ['{}: {}'.format(self.name, self.description), '']
        lines.extend(option.usage() for option in self.options.values())
        return '\n'.join(lines)


def load_config_file(path) -> dict[str, str]:
    """
    Read `key = value` lines with `#` comments.  Keys are long option
    names.  Later lines override earlier ones.

    Raises `ParseError` with the line number of a malformed line.
    """
    source = files.source_name(path)
    values = {}
    with files.open_file(path, 'rt') as lines:
        for (line_num, line) in enumerate(lines, start=1):
            (pair, err) = parselib.config_line_err(line)
            if err is not None:
                raise err.at(source, line_num)
            if pair is not None:
                (key, value) = pair
                values[key] = value
    return values
