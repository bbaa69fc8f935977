"""
Logging for rcdpy: the standard `logging` API plus loggers whose
messages use `str.format` placeholders, a one-call setup for the command
line, and a record of the runtime environment for the top of every log.

Library modules get their logger with

    logger = logging.getLogger(__name__, '{')

and log with `logger.info('Epoch {}: F = {F:.6g}', epoch, F=value)`.
Keyword arguments become attributes of the record, so formatters can
use them too.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See LICENSE for
# details.


import io
import logging as _logging
import os
import pathlib
import platform
import sys

# Everything from the standard module is available from this one
from logging import *


DEFAULT_FORMAT = '{asctime} {levelname} {name}: {message}'
DEFAULT_DATEFMT = '%Y-%m-%dT%H:%M:%S'


class BraceRecord(_logging.LogRecord):
    """Record whose message is formatted with `str.format`."""

    def getMessage(self):
        return str(self.msg).format(*self.args, **self.__dict__)


_record_classes = {
    '{': BraceRecord,
    '%': _logging.LogRecord,
}


class StyledLogger(_logging.Logger):
    """
    Logger that builds its records with the class for its message style
    rather than with the global record factory, so that loggers of both
    styles can coexist.
    """

    record_class = BraceRecord

    def use_style(self, style):
        if style not in _record_classes:
            raise ValueError('Unknown message style: {!r} (expected one '
                             'of: {})'.format(style,
                                              ', '.join(_record_classes)))
        self.record_class = _record_classes[style]

    def makeRecord(self, name, level, fn, lno, msg, args, exc_info,
                   func=None, extra=None, sinfo=None):
        record = self.record_class(
            name, level, fn, lno, msg, args, exc_info, func, sinfo)
        record.__dict__.update(extra or {})
        return record

    def _log(self, level, msg, args, exc_info=None, extra=None,
             stack_info=False, stacklevel=1, **fields):
        # Keyword arguments are extra record fields
        fields.update(extra or {})
        super()._log(level, msg, args, exc_info, fields, stack_info,
                     stacklevel + 1)


def getLogger(name=None, style=None):
    """
    Return the named logger.  With a `style` ('{' or '%'), the logger
    is a `StyledLogger` using that style, and `ValueError` is raised if
    a plain logger of that name already exists.
    """
    if style is None:
        return _logging.getLogger(name)
    # The logger class is module state, so switch it under the lock
    with _logging._lock:
        previous = _logging.getLoggerClass()
        _logging.setLoggerClass(StyledLogger)
        try:
            logger = _logging.getLogger(name)
        finally:
            _logging.setLoggerClass(previous)
    if not isinstance(logger, StyledLogger):
        raise ValueError('Logger {!r} already exists with class {}'.format(
            name, type(logger).__name__))
    logger.use_style(style)
    return logger


def default_config(
        file: None | str | pathlib.Path | io.IOBase=None,
        level: int=_logging.INFO,
        format: str=DEFAULT_FORMAT,
        datefmt: str=DEFAULT_DATEFMT,
) -> _logging.Handler:
    """
    Send all logs at or above `level` to one handler, replacing any
    existing root handlers, and return the handler.

    Logs go to stderr unless a filename or an open stream is given so
    that stdout carries only results.  Records from plain loggers are
    made `str.format`-style too.
    """
    if file is None:
        handler = _logging.StreamHandler(sys.stderr)
    elif isinstance(file, (str, pathlib.PurePath)):
        handler = _logging.FileHandler(file, encoding='utf-8')
    elif isinstance(file, io.IOBase):
        handler = _logging.StreamHandler(file)
    else:
        raise ValueError('Not a file or filename: {!r}'.format(file))
    handler.setFormatter(_logging.Formatter(format, datefmt, '{'))
    root = _logging.getLogger()
    for old in list(root.handlers):
        root.removeHandler(old)
        old.close()
    root.addHandler(handler)
    root.setLevel(level)
    _logging.setLogRecordFactory(BraceRecord)
    return handler


##### Levels #####


level_names = {
    'critical': CRITICAL,
    'error': ERROR,
    'warning': WARNING,
    'warn': WARNING,
    'info': INFO,
    'debug': DEBUG,
}
"""Names accepted by `--log-level`"""


def parse_level_name(name, default=None) -> tuple[int | None, str | None]:
    """
    Return (level, None) for a level name in `level_names` (any case,
    surrounding whitespace ignored), or (default, error message).
    `None` names the default without error.
    """
    if name is None:
        return (default, None)
    if not isinstance(name, str):
        return (default, 'Log level is not a name: {!r}'.format(name))
    level = level_names.get(name.strip().lower())
    if level is None:
        return (default, 'Unknown log level: {!r} (expected one of: {})'
                .format(name, ', '.join(level_names)))
    return (level, None)


##### Runtime Environment #####


def _versions():
    import numpy
    import scipy
    from . import __version__
    return 'rcdpy {}, numpy {}, scipy {}'.format(
        __version__, numpy.__version__, scipy.__version__)


def _os_description():
    uname = platform.uname()
    return '{} {} {}'.format(uname.system, uname.release, uname.machine)


environment_probes = {
    'python': lambda: sys.version.replace('\n', ' '),
    'executable': lambda: sys.executable,
    'packages': _versions,
    'argv': lambda: ' '.join(sys.argv),
    'cwd': os.getcwd,
    'os': _os_description,
    'cpus': os.cpu_count,
    'pid': os.getpid,
}
"""Functions that describe the environment, by label"""


def runtime_environment(labels=None) -> dict[str, object]:
    """
    Describe the runtime environment as a dictionary from label to
    value, for the given labels of `environment_probes` (default all).
    Unknown labels are skipped and a failing probe yields a
    `<failed: ...>` description instead of an exception.
    """
    if labels is None:
        labels = environment_probes.keys()
    env = {}
    for label in labels:
        probe = environment_probes.get(label)
        if probe is None:
            continue
        try:
            env[label] = probe()
        except Exception as e:
            env[label] = '<failed: {}>'.format(e)
    return env


def format_environment(env: dict, indent: str='  ') -> str:
    lines = ['{}{}: {}'.format(indent, label, value)
             for (label, value) in env.items()]
    return '\n'.join(['{', *lines, '}'])


def log_runtime_environment(logger=None, level=DEBUG, labels=None):
    """Log the runtime environment as one multi-line message."""
    if logger is None:
        logger = getLogger(__name__, '{')
    if logger.isEnabledFor(level):
        logger.log(level, 'Runtime environment:\n{}',
                   format_environment(runtime_environment(labels)))
