"""Tests `arguments.py`."""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


import io
import os
import tempfile
import unittest

from .. import arguments
from .. import parse


class ParseTest(unittest.TestCase):

    def test_empty_args(self):
        (kw_args, idx_args) = arguments.parse([])
        self.assertEqual({}, kw_args)
        self.assertEqual([], idx_args)

    def test_positional(self):
        args = ['lasso', 'solve', 'inst.txt']
        (kw_args, idx_args) = arguments.parse(args)
        self.assertEqual({}, kw_args)
        self.assertEqual(args, idx_args)

    def test_key_value(self):
        (kw_args, idx_args) = arguments.parse(
            ['--seed', '1', '--law', 'uniform', '--max-epochs', '30'])
        self.assertEqual(
            {'seed': ['1'], 'law': ['uniform'], 'max-epochs': ['30']},
            kw_args)
        self.assertEqual([], idx_args)

    def test_assignment(self):
        (kw_args, idx_args) = arguments.parse(
            ['--seed=1', '--law=q-shrinking:0.5', '--out='])
        self.assertEqual(
            {'seed': ['1'], 'law': ['q-shrinking:0.5'], 'out': ['']},
            kw_args)
        self.assertEqual([], idx_args)

    def test_flags(self):
        (kw_args, idx_args) = arguments.parse(
            ['--exact-blocks', '--quiet', '--seed', '3', '--help'])
        self.assertEqual(
            {'exact-blocks': [True], 'quiet': [True], 'seed': ['3'],
             'help': [True]},
            kw_args)
        self.assertEqual([], idx_args)

    def test_flag_consumes_next_positional(self):
        (kw_args, idx_args) = arguments.parse(['--quiet', 'inst.txt'])
        self.assertEqual({'quiet': ['inst.txt']}, kw_args)
        self.assertEqual([], idx_args)
        (kw_args, idx_args) = arguments.parse(['--quiet=true', 'inst.txt'])
        self.assertEqual({'quiet': ['true']}, kw_args)
        self.assertEqual(['inst.txt'], idx_args)

    def test_repeated_keys(self):
        (kw_args, _) = arguments.parse(['--seed', '1', '--seed=2'])
        self.assertEqual({'seed': ['1', '2']}, kw_args)
        (kw_args, _) = arguments.parse(
            ['--seed', '1', '--seed=2'],
            reduce_values=arguments.pick_last_value)
        self.assertEqual({'seed': '2'}, kw_args)

    def test_separator(self):
        (kw_args, idx_args) = arguments.parse(
            ['solve', '--seed', '4', '--', '--odd-name.txt', '--'])
        self.assertEqual({'seed': ['4']}, kw_args)
        self.assertEqual(['solve', '--odd-name.txt', '--'], idx_args)

    def test_value_parser(self):
        (kw_args, idx_args) = arguments.parse(
            ['--seed', '4', '--target=1e-6', '--trace', 'on', 'x'],
            value_parser=arguments.parse_atom)
        self.assertEqual(
            {'seed': [4], 'target': [1e-6], 'trace': [True]}, kw_args)
        self.assertEqual(['x'], idx_args)


class OptionTest(unittest.TestCase):

    def test_attribute(self):
        self.assertEqual(
            'max_epochs', arguments.Option('max-epochs', 'int').attribute)

    def test_unknown_type(self):
        with self.assertRaises(ValueError):
            arguments.Option('seed', 'integer')

    def test_convert(self):
        for (typ, raw, exp) in (
                ('int', '12', 12),
                ('float', '1e-6', 1e-6),
                ('bool', True, True),
                ('bool', 'off', False),
                ('str', 'uniform', 'uniform'),
                ('int-list', '1,10,100', [1, 10, 100]),
                ('float-list', '1e-3, 1e-6', [1e-3, 1e-6]),
        ):
            with self.subTest((typ, raw)):
                option = arguments.Option('key', typ)
                self.assertEqual(exp, option.convert(raw))

    def test_convert__bad(self):
        for (typ, raw) in (('int', '1.5'), ('int', True), ('float', 'x'),
                           ('str', True), ('bool', 'maybe'),
                           ('int-list', '1,x')):
            with self.subTest((typ, raw)):
                with self.assertRaises(arguments.UsageError):
                    arguments.Option('key', typ).convert(raw)

    def test_bool_hint(self):
        with self.assertRaises(arguments.UsageError) as ctx:
            arguments.Option('quiet', 'bool').convert('inst.txt')
        self.assertIn('--quiet=true', str(ctx.exception))

    def test_choices(self):
        option = arguments.Option(
            'loss', choices=('l2svm', 'logistic'), default='l2svm')
        self.assertEqual('logistic', option.convert('logistic'))
        with self.assertRaises(arguments.UsageError) as ctx:
            option.convert('hinge')
        self.assertIn('l2svm, logistic', str(ctx.exception))

    def test_usage(self):
        usage = arguments.Option(
            'max-epochs', 'int', 30, 'Epoch budget').usage()
        self.assertIn('--max-epochs <int>', usage)
        self.assertIn('Epoch budget [default: 30]', usage)
        usage = arguments.Option('quiet', 'bool', help='Less output').usage()
        self.assertNotIn('<bool>', usage)
        usage = arguments.Option('out', required=True).usage()
        self.assertIn('[required]', usage)


class SchemaTest(unittest.TestCase):

    def setUp(self):
        self.schema = arguments.Schema('solve', [
            arguments.Option('seed', 'int', 0),
            arguments.Option('max-epochs', 'int', 30),
            arguments.Option('target', 'float'),
            arguments.Option('instance', required=True),
        ], 'Solve an instance')

    def test_duplicate_names(self):
        with self.assertRaises(ValueError):
            arguments.Schema('x', [arguments.Option('a'),
                                   arguments.Option('a')])

    def test_defaults(self):
        values = self.schema.resolve({'instance': ['inst.txt']})
        self.assertEqual(
            {'seed': 0, 'max_epochs': 30, 'target': None,
             'instance': 'inst.txt'},
            values)

    def test_flags_override_file(self):
        values = self.schema.resolve(
            {'seed': ['1', '2'], 'instance': 'inst.txt'},
            {'seed': '9', 'max-epochs': '5'})
        self.assertEqual(2, values['seed'])
        self.assertEqual(5, values['max_epochs'])

    def test_unknown_keys(self):
        with self.assertRaises(arguments.UsageError) as ctx:
            self.schema.resolve({'instance': 'x', 'sed': '1'})
        self.assertIn('sed', str(ctx.exception))
        with self.assertRaises(arguments.UsageError) as ctx:
            self.schema.resolve({'instance': 'x'}, {'max_epochs': '1'})
        self.assertIn('config key', str(ctx.exception))

    def test_missing_required(self):
        with self.assertRaises(arguments.UsageError) as ctx:
            self.schema.resolve({})
        self.assertIn('--instance', str(ctx.exception))

    def test_required_from_file(self):
        values = self.schema.resolve({}, {'instance': 'from-file.txt'})
        self.assertEqual('from-file.txt', values['instance'])

    def test_usage(self):
        lines = self.schema.usage().split('\n')
        self.assertEqual('solve: Solve an instance', lines[0])
        self.assertEqual(6, len(lines))


class ConfigFileTest(unittest.TestCase):

    def test_load(self):
        text = ('# Solver settings\n'
                'seed = 3\n'
                '\n'
                'law=q-shrinking:0.5   # trailing\n'
                'seed = 4\n')
        values = arguments.load_config_file(io.StringIO(text))
        self.assertEqual({'seed': '4', 'law': 'q-shrinking:0.5'}, values)

    def test_load_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'solve.cfg')
            with open(path, 'wt') as file:
                file.write('max-epochs = 12\n')
            self.assertEqual({'max-epochs': '12'},
                             arguments.load_config_file(path))

    def test_bad_line(self):
        text = 'seed = 3\n# fine\nlaw uniform\n'
        with self.assertRaises(parse.ParseError) as ctx:
            arguments.load_config_file(io.StringIO(text))
        self.assertEqual(3, ctx.exception.line)
