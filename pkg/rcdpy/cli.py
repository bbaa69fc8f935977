"""
Command-line front end.

    rcdpy <command> [--option value ...]

Commands: `generate`, `verify`, `solve`, `bounds`, `bench`, `svm
generate`, `svm train`, `svm eval`, and `help [command]`.  Every command
also takes `--config <file>` (`key = value` lines whose keys are the
long option names; flags override the file), `--log-level`, and
`--log-file`.  Logs go to stderr and results to stdout or the given
files.

Exit codes: 0 success, 1 usage error, 2 numerical failure (drift guard
tripped) or failed verification, 3 I/O or input format error.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


import multiprocessing
import sys

import numpy

from . import arguments
from . import bounds
from . import csv
from . import files
from . import lasso
from . import logging
from . import parse
from . import report
from . import solvers
from . import statistics
from . import svm
from .arguments import Option, Schema, UsageError
from .framework import NumericalDriftError, ProblemError
from .sampling import PowerLaw, QShrinking, SwitchingLaw, Uniform


logger = logging.getLogger(__name__, '{')


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


common_options = (
    Option('config', 'str', help='config file of `key = value` lines'),
    Option('log-level', 'str', 'info',
           help='critical, error, warning, info, or debug'),
    Option('log-file', 'str', help='log to this file instead of stderr'),
)


##### generate #####


generate_schema = Schema('generate', common_options + (
    Option('m', 'int', required=True, help='number of rows of A'),
    Option('n', 'int', required=True, help='number of columns of A'),
    Option('nnz-a', 'int', required=True, help='nonzeros of A (>= n)'),
    Option('nnz-x', 'int', required=True, help='nonzeros of x*'),
    Option('lambda', 'float', 1.0, help='L1 weight'),
    Option('seed', 'int', 0, help='PRNG seed'),
    Option('stream', 'int', 0, help='PRNG stream'),
    Option('lipschitz-profile', 'str',
           help="target ||a_i||^2 for lambda = 0: 'uniform' or "
           "'w:v,w:v,...'"),
    Option('residual-scale', 'float', 1.0,
           help='size of the residual at x*'),
    Option('format', 'str', choices=('text', 'npz'),
           help='instance file format [default: by suffix]'),
    Option('out', 'str', required=True, help='instance file'),
), 'Generate a Lasso instance with a certified minimizer.')


def cmd_generate(opts):
    instance = lasso.generate_instance(
        opts['m'], opts['n'], opts['nnz_a'], opts['nnz_x'], opts['lambda'],
        opts['seed'], opts['stream'], opts['lipschitz_profile'],
        opts['residual_scale'])
    lasso.write_instance(instance, opts['out'], opts['format'])
    print('f_star', files.format_float(instance.f_star))
    return EXIT_OK


##### verify #####


verify_schema = Schema('verify', common_options + (
    Option('instance', 'str', required=True, help='instance file'),
    Option('tol', 'float', help='optimality tolerance '
           '[default: 1e-9 max(lambda, 1)]'),
), "Check an instance's certificate.")


def cmd_verify(opts):
    instance = lasso.read_instance(opts['instance'])
    result = lasso.verify_certificate(instance, opts['tol'])
    print('max_violation', files.format_float(result.max_violation))
    print('worst_coordinate', result.worst_coordinate)
    print('objective_gap', files.format_float(result.objective_gap))
    print('passed', int(result.passed))
    if not result.passed:
        logger.error('Certificate failed: {!r}', result)
        return EXIT_NUMERICAL
    return EXIT_OK


##### solve #####


solve_schema = Schema('solve', common_options + (
    Option('instance', 'str', required=True, help='instance file'),
    Option('algo', 'str', 'ucdc', choices=('ucdc', 'rcdc', 'rcds'),
           help='method'),
    Option('alpha', 'float', 0.0, help='sample block i with probability '
           'proportional to L_i^alpha (rcdc, rcds)'),
    Option('q', 'float', help='sample from the support with probability q '
           'after iteration k0 (rcdc)'),
    Option('k0', 'int', 0, help='first iteration of support sampling'),
    Option('law-switch', 'float', help='switch to uniform sampling after '
           'this many epochs'),
    Option('x0', 'str', 'zero', help="start: 'zero', 'ls', 'random', "
           "'segment:<theta>', or a solution file"),
    Option('epochs', 'float', 100.0, help='budget in epochs of n '
           'iterations'),
    Option('max-iterations', 'int', help='budget in iterations'),
    Option('target', 'float', help='stop at F - F* <= target'),
    Option('target-ratio', 'float',
           help='stop at F - F* <= ratio (F(x0) - F*)'),
    Option('min-epoch-decrease', 'float',
           help='stop when an epoch decreases F by at most this '
           'fraction of |F(x0)|'),
    Option('seed', 'int', 0, help='PRNG seed'),
    Option('stream', 'int', 0, help='PRNG stream'),
    Option('trace-every', 'int', 1, help='epochs between trace rows'),
    Option('drift-every', 'int', 1, help='epochs between drift checks'),
    Option('exact-blocks', 'bool', False,
           help='minimize exactly along blocks (lambda = 0)'),
    Option('trace-out', 'str', help='trace CSV [default: stdout]'),
    Option('solution-out', 'str', help='solution file'),
), 'Solve a Lasso instance and emit a trace.')


def make_law(opts, n):
    """Return the probability law the solve options ask for."""
    algo = opts['algo']
    if algo == 'ucdc':
        if opts['q'] is not None or opts['alpha'] != 0:
            raise UsageError('UCDC samples uniformly; use --algo rcdc for '
                             '--alpha or --q')
        return Uniform()
    if opts['q'] is not None:
        if algo != 'rcdc':
            raise UsageError('--q needs --algo rcdc')
        law = QShrinking(opts['q'], opts['k0'])
    else:
        law = PowerLaw(opts['alpha'])
    if opts['law_switch'] is not None:
        law = SwitchingLaw(law, Uniform(), int(round(opts['law_switch'] * n)))
    return law


def make_start(spec, problem, cfg):
    """Return the starting point for `--x0`."""
    if spec == 'zero':
        return numpy.zeros(problem.dim)
    if spec == 'ls':
        return solvers.least_squares_start(problem, cfg)
    if spec == 'random':
        return solvers.random_start(problem, cfg.seed, cfg.stream)
    if spec.startswith('segment:'):
        (theta, err) = parse.float_err(spec[len('segment:'):])
        if err is not None:
            raise UsageError('Bad value for --x0: {}'.format(err))
        return solvers.segment_start(
            solvers.least_squares_start(problem, cfg), theta)
    (header, indices, values) = files.read_sparse_vector(spec)
    dim = header.get('n', problem.dim)
    if dim != problem.dim:
        raise ProblemError('Start has dimension {}, expected {}'.format(
            dim, problem.dim))
    x0 = numpy.zeros(problem.dim)
    x0[indices] = values
    return x0


def cmd_solve(opts):
    instance = lasso.read_instance(opts['instance'])
    problem = lasso.make_problem(instance)
    if opts['target'] is not None and opts['target_ratio'] is not None:
        raise UsageError('Give at most one of --target and --target-ratio')
    cfg = solvers.SolveConfig(
        seed=opts['seed'], stream=opts['stream'],
        max_epochs=opts['epochs'], max_iterations=opts['max_iterations'],
        trace_every=opts['trace_every'], drift_every=opts['drift_every'],
        min_epoch_decrease=opts['min_epoch_decrease'],
        exact_blocks=opts['exact_blocks'])
    law = make_law(opts, problem.n)
    x0 = make_start(opts['x0'], problem, cfg)
    target = opts['target']
    if opts['target_ratio'] is not None:
        if problem.f_star is None:
            raise ProblemError('A target ratio needs a known optimal value')
        xi0 = instance.objective(x0) - problem.f_star
        target = opts['target_ratio'] * xi0
    cfg = cfg.replace(target=target)
    if opts['algo'] == 'rcds':
        result = solvers.rcds_run(problem, law, x0, cfg)
    else:
        result = solvers.rcdc_run(problem, law, x0, cfg)
    csv.write_trace(opts['trace_out'] or sys.stdout, result.trace)
    if opts['solution_out'] is not None:
        nonzero = numpy.flatnonzero(result.x)
        header = {'n': problem.dim, 'objective': result.objective,
                  'iterations': result.iterations, 'status': result.status}
        files.write_sparse_vector(opts['solution_out'], nonzero,
                                  result.x[nonzero], header)
    return EXIT_OK


##### bounds #####


bounds_schema = Schema('bounds', common_options + (
    Option('bound', 'str', 'all', help='bound ID or `all`: ' + ', '.join(
        bounds.bounds)),
    Option('n', 'int', help='number of blocks'),
    Option('eps', 'float', help='target accuracy'),
    Option('rho', 'float', help='failure probability'),
    Option('xi0', 'float', help='initial residual'),
    Option('R-sq', 'float', help='squared level set radius'),
    Option('mu', 'float', help='strong convexity parameter'),
    Option('c', 'float', help='constant of the decreasing sequence'),
    Option('dist-sq', 'float', help='||x0 - x*||_L^2'),
    Option('S', 'float', help='sum of the L_i'),
    Option('R-sq-I', 'float', help='squared radius in the unit norm'),
    Option('lipschitz', 'float-list', help='L_i for the comparison table'),
    Option('u', 'float-list', help='x* - x0 for the comparison table'),
    Option('L-grad', 'float', help='Lipschitz constant of grad f for the '
           'comparison table'),
    Option('beta', 'float', help='common coordinate constant for the '
           'comparison table [default: max L_i]'),
), 'Evaluate iteration complexity bounds.')


def format_bound(value):
    if isinstance(value, tuple):
        return ' '.join('-' if v is None else str(v) for v in value)
    return str(value)


def cmd_bounds(opts):
    inputs = bounds.BoundInputs(
        n=opts['n'], eps=opts['eps'], rho=opts['rho'], xi0=opts['xi0'],
        R_sq=opts['R_sq'], mu=opts['mu'], c=opts['c'],
        dist_sq=opts['dist_sq'], S=opts['S'], R_sq_I=opts['R_sq_I'])
    if opts['lipschitz'] is not None or opts['u'] is not None:
        if (opts['lipschitz'] is None or opts['u'] is None
                or opts['L_grad'] is None or opts['eps'] is None):
            raise UsageError('The comparison table needs --lipschitz, --u, '
                             '--L-grad, and --eps')
        rows = bounds.comparison_table(opts['L_grad'], opts['lipschitz'],
                                       opts['u'], opts['eps'], opts['beta'])
        print(report.format_table(('method', 'constant', 'leading term'),
                                  rows))
        return EXIT_OK
    if opts['bound'] == 'all':
        rows = [(bound_id, description,
                 None if value is None else format_bound(value), error)
                for (bound_id, description, value, error)
                in bounds.summary_table(inputs)]
        print(report.format_table(('bound', 'description', 'iterations',
                                   'not applicable because'), rows))
        return EXIT_OK
    try:
        value = bounds.evaluate_bound(opts['bound'], inputs)
    except KeyError as e:
        raise UsageError(e.args[0]) from e
    print(opts['bound'], format_bound(value))
    return EXIT_OK


##### bench #####


bench_schema = Schema('bench', common_options + (
    Option('m', 'int', 2000, help='number of rows of A'),
    Option('n', 'int', 1000, help='number of columns of A'),
    Option('nnz-a', 'int-list', (10000, 100000),
           help='comma-separated nonzeros of A'),
    Option('nnz-x', 'int-list', (10, 100), help='comma-separated nonzeros '
           'of x*'),
    Option('lambda', 'float', 1.0, help='L1 weight'),
    Option('seeds', 'int', 3, help='number of seeds per grid point'),
    Option('seed', 'int', 0, help='first seed'),
    Option('epochs', 'int', 10, help='epochs per timing run'),
    Option('jobs', 'int', 1, help='parallel processes'),
    Option('timing-out', 'str', required=True, help='timing CSV'),
    Option('envelope-out', 'str', help='residual envelope CSV'),
), 'Time UCDC epochs over a grid of sparsity levels.')


def bench_task(task):
    """
    Time one UCDC run.  Return (timing row, [(epoch, residual ratio)]).
    """
    (m, n, nnz_a, nnz_x, lam, seed, epochs) = task
    instance = lasso.generate_instance(m, n, nnz_a, nnz_x, lam, seed)
    problem = lasso.make_problem(instance)
    cfg = solvers.SolveConfig(seed=seed, max_epochs=epochs, trace_every=1,
                              drift_every=0)
    result = solvers.ucdc_run(problem, None, cfg)
    xi0 = result.trace[0].residual
    ratios = [(row.epoch, row.residual / xi0) for row in result.trace
              if float(row.epoch).is_integer()]
    return ((nnz_a, nnz_x, seed, result.elapsed_s * n / result.iterations),
            ratios)


def cmd_bench(opts):
    if opts['jobs'] < 1 or opts['seeds'] < 1 or opts['epochs'] < 1:
        raise UsageError('--jobs, --seeds, and --epochs must be positive')
    nnz_as = opts['nnz_a']
    nnz_xs = opts['nnz_x']
    tasks = [(opts['m'], opts['n'], nnz_a, nnz_x, opts['lambda'], seed,
              opts['epochs'])
             for nnz_a in nnz_as for nnz_x in nnz_xs
             for seed in range(opts['seed'], opts['seed'] + opts['seeds'])]
    logger.info('Benchmarking {} runs on {} processes', len(tasks),
                opts['jobs'])
    if opts['jobs'] > 1:
        with multiprocessing.Pool(opts['jobs']) as pool:
            results = pool.map(bench_task, tasks)
    else:
        results = [bench_task(task) for task in tasks]
    timings = [timing for (timing, _) in results]
    csv.write_table(opts['timing_out'], csv.TIMING_FIELDS, timings)
    if opts['envelope_out'] is not None:
        rows = []
        for nnz_a in nnz_as:
            for nnz_x in nnz_xs:
                traces = [ratios for ((a, x, _, _), ratios) in results
                          if (a, x) == (nnz_a, nnz_x)]
                rows.extend((nnz_a, nnz_x) + row
                            for row in statistics.envelope(traces))
        csv.write_table(opts['envelope_out'], csv.ENVELOPE_FIELDS, rows)
    medians = [(nnz_a, nnz_x, statistics.median(
        [t for (a, x, _, t) in timings if (a, x) == (nnz_a, nnz_x)]))
        for nnz_a in nnz_as for nnz_x in nnz_xs]
    logger.info('Median seconds per epoch:\n{}', report.pivot_table(
        medians, 'nnz_a', 'nnz_x', 'time_per_epoch',
        ('nnz_a', 'nnz_x', 'time_per_epoch')))
    return EXIT_OK


##### svm #####


svm_generate_schema = Schema('svm generate', common_options + (
    Option('m', 'int', required=True, help='number of examples'),
    Option('n-features', 'int', required=True, help='number of features'),
    Option('density', 'float', 0.01, help='fraction of nonzero features'),
    Option('seed', 'int', 0, help='PRNG seed'),
    Option('stream', 'int', 0, help='PRNG stream'),
    Option('out', 'str', required=True, help='LIBSVM data file'),
), 'Generate linearly separable data.')


def cmd_svm_generate(opts):
    (dataset, _) = svm.generate_separable(
        opts['m'], opts['n_features'], opts['density'], opts['seed'],
        opts['stream'])
    svm.write_libsvm(dataset, opts['out'])
    return EXIT_OK


svm_train_schema = Schema('svm train', common_options + (
    Option('data', 'str', required=True, help='LIBSVM training data'),
    Option('test', 'str', help='LIBSVM testing data'),
    Option('loss', 'str', 'l2svm', choices=svm.LOSSES, help='loss'),
    Option('gamma', 'float', 1.0, help='loss weight'),
    Option('scale', 'float', 1.0, help='L1 weight'),
    Option('epochs', 'float', 10.0, help='budget in epochs'),
    Option('seed', 'int', 0, help='PRNG seed'),
    Option('stream', 'int', 0, help='PRNG stream'),
    Option('drift-every', 'int', 1, help='epochs between drift checks'),
    Option('model-out', 'str', help='model file'),
    Option('trace-out', 'str', help='accuracy trace CSV'),
), 'Train an L1-regularized linear classifier.')


def cmd_svm_train(opts):
    dataset = svm.load_libsvm(opts['data'])
    test_data = (None if opts['test'] is None
                 else svm.load_libsvm(opts['test']))
    problem = svm.make_problem(dataset, opts['loss'], opts['gamma'],
                               opts['scale'])
    cfg = solvers.SolveConfig(
        seed=opts['seed'], stream=opts['stream'], max_epochs=opts['epochs'],
        trace_every=1, drift_every=opts['drift_every'])
    result = svm.train(problem, cfg, test_data)
    if opts['model_out'] is not None:
        svm.write_model(opts['model_out'], result.w, opts['loss'],
                        opts['gamma'])
    if opts['trace_out'] is not None:
        csv.write_table(opts['trace_out'], csv.ACCURACY_FIELDS,
                        result.accuracy)
    print('train_accuracy', files.format_float(result.train_accuracy))
    if test_data is not None:
        print('test_accuracy', files.format_float(result.test_accuracy))
    return EXIT_OK


svm_eval_schema = Schema('svm eval', common_options + (
    Option('data', 'str', required=True, help='LIBSVM data'),
    Option('model', 'str', required=True, help='model file'),
), 'Evaluate the accuracy of a model.')


def cmd_svm_eval(opts):
    model = svm.read_model(opts['model'])
    dataset = svm.load_libsvm(opts['data'])
    print('accuracy', files.format_float(svm.evaluate_accuracy(model.w,
                                                               dataset)))
    return EXIT_OK


##### Dispatch #####


commands = {
    'generate': (generate_schema, cmd_generate),
    'verify': (verify_schema, cmd_verify),
    'solve': (solve_schema, cmd_solve),
    'bounds': (bounds_schema, cmd_bounds),
    'bench': (bench_schema, cmd_bench),
    'svm generate': (svm_generate_schema, cmd_svm_generate),
    'svm train': (svm_train_schema, cmd_svm_train),
    'svm eval': (svm_eval_schema, cmd_svm_eval),
}


def usage() -> str:
    lines = [__doc__.strip(), '', 'Commands:']
    lines.extend('  {:14}{}'.format(name, schema.description)
                 for (name, (schema, _)) in commands.items())
    lines.append('  {:14}{}'.format('help', 'Describe a command.'))
    return '\n'.join(lines)


def command_name(positional):
    """Split positional arguments into a command name and the rest."""
    if not positional:
        return ('help', [])
    if positional[0] == 'svm' and len(positional) > 1:
        return ('svm ' + positional[1], positional[2:])
    return (positional[0], positional[1:])


def run(argv) -> int:
    """Run a command; exceptions propagate."""
    (kw_args, positional) = arguments.parse(argv)
    (name, rest) = command_name(positional)
    if name == 'help':
        topic = ' '.join(rest)
        if topic and topic not in commands:
            raise UsageError('Unknown command: {!r}'.format(topic))
        print(commands[topic][0].usage() if topic else usage())
        return EXIT_OK
    if name not in commands:
        raise UsageError('Unknown command: {!r} (try `rcdpy help`)'
                         .format(name))
    if rest:
        raise UsageError('Unexpected arguments: {}'.format(' '.join(rest)))
    (schema, function) = commands[name]
    file_values = {}
    if 'config' in kw_args:
        file_values = arguments.load_config_file(
            schema.options['config'].convert(kw_args['config'][-1]))
        file_values.pop('config', None)
    opts = schema.resolve(kw_args, file_values)
    (level, err) = logging.parse_level_name(opts['log_level'])
    if err is not None:
        raise UsageError(err)
    logging.default_config(file=opts['log_file'], level=level)
    logging.log_runtime_environment(logger)
    return function(opts)


def main(argv=None) -> int:
    """Run a command and map its exceptions to exit codes."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        return run(argv)
    except parse.ParseError as e:
        print('rcdpy: bad input: {}'.format(e), file=sys.stderr)
        return EXIT_IO
    except NumericalDriftError as e:
        print('rcdpy: numerical failure: {}'.format(e), file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print('rcdpy: {}'.format(e), file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as e:
        print('rcdpy: {}'.format(e), file=sys.stderr)
        return EXIT_USAGE
