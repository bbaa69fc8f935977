"""
Randomized block coordinate descent solvers.

* `rcdc_run`: randomized coordinate descent for composite functions
  with any probability law
* `ucdc_run`: the same with uniform probabilities
* `rcds_run`: randomized coordinate descent for smooth functions, whose
  steps are -(1 / L_i) times the sharp of the block gradient
* `run_with_restarts`: independent short runs, keeping the best
* `regularized_run`: UCDC on F plus a small proximal term

All solvers share one loop.  Each iteration samples a block, computes
its update, and commits it through the problem's oracle, which keeps
every cache current.  The loop keeps a trace of `TraceRow`s: one at
the start, one every `trace_every` epochs (an epoch is n iterations),
one whenever the residual F(x_k) - F* falls by another factor of 10
relative to the initial residual (when F* is known), and one at the
end.  Elapsed times count only the iterations, not the trace, drift
checks, or observers.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from __future__ import annotations

import collections
import math
import time

import numpy

from . import bounds
from . import framework
from . import logging
from .blocks import sharp
from .framework import (
    CompositeProblem,
    ProblemError,
    ProximalRegularizer,
    SolverState,
    ZeroRegularizer,
)
from .numpy_utils import UniformStream, as_vector, new_prng
from .sampling import ProbabilityLaw, Uniform


logger = logging.getLogger(__name__, '{')


MONOTONICITY_SLACK = 1e-12
"""Relative slack allowed in F(x_(k+1)) <= F(x_k)"""


##### Configuration and Results #####


class SolveConfig:
    """
    Settings of a solver run.

    * `seed`, `stream`: PRNG seed and stream ID.  Parallel runs of the
      same configuration use distinct streams.
    * `max_epochs`: budget in units of n iterations
    * `max_iterations`: budget in iterations, overriding `max_epochs`
    * `target`: stop once F(x_k) - F* <= target (needs a known F*)
    * `trace_every`: epochs between periodic trace rows (0 for none)
    * `min_epoch_decrease`: stop once the decrease of F over an epoch
      is at most this fraction of |F(x_0)|
    * `drift_every`: epochs between drift checks (0 for none)
    * `drift_tol`: relative tolerance of drift checks
    * `exact_blocks`: minimize F exactly along each block instead of
      its upper model (quadratic f and zero Psi only)
    """

    fields = ('seed', 'max_epochs', 'target', 'trace_every', 'stream',
              'max_iterations', 'min_epoch_decrease', 'drift_every',
              'drift_tol', 'exact_blocks')

    def __init__(self, seed=0, max_epochs=100, target=None, trace_every=1,
                 stream=0, max_iterations=None, min_epoch_decrease=None,
                 drift_every=1, drift_tol=1e-9, exact_blocks=False):
        if int(seed) < 0 or int(stream) < 0:
            raise ValueError('Seed and stream must be nonnegative: {!r}, '
                             '{!r}'.format(seed, stream))
        if not max_epochs >= 1:
            raise ValueError('Epoch budget must be at least 1: {!r}'
                             .format(max_epochs))
        if max_iterations is not None and max_iterations < 0:
            raise ValueError('Iteration budget must be nonnegative: {!r}'
                             .format(max_iterations))
        if target is not None and not target > 0:
            raise ValueError('Target residual must be positive: {!r}'
                             .format(target))
        if trace_every < 0 or drift_every < 0:
            raise ValueError('Trace and drift intervals must be '
                             'nonnegative')
        if min_epoch_decrease is not None and not min_epoch_decrease >= 0:
            raise ValueError('Minimum epoch decrease must be nonnegative: '
                             '{!r}'.format(min_epoch_decrease))
        if not drift_tol > 0:
            raise ValueError('Drift tolerance must be positive: {!r}'
                             .format(drift_tol))
        self.seed = int(seed)
        self.max_epochs = max_epochs
        self.target = None if target is None else float(target)
        self.trace_every = int(trace_every)
        self.stream = int(stream)
        self.max_iterations = (None if max_iterations is None
                               else int(max_iterations))
        self.min_epoch_decrease = min_epoch_decrease
        self.drift_every = int(drift_every)
        self.drift_tol = float(drift_tol)
        self.exact_blocks = bool(exact_blocks)

    def replace(self, **changes) -> SolveConfig:
        """Return a copy with the given settings changed."""
        unknown = set(changes) - set(self.fields)
        if unknown:
            raise TypeError('Unknown settings: {}'.format(
                ', '.join(sorted(unknown))))
        values = {name: getattr(self, name) for name in self.fields}
        values.update(changes)
        return SolveConfig(**values)

    def iteration_budget(self, n) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return int(math.ceil(self.max_epochs * n))

    def __eq__(self, other):
        return (isinstance(other, SolveConfig)
                and all(getattr(self, name) == getattr(other, name)
                        for name in self.fields))

    def __repr__(self):
        return 'SolveConfig({})'.format(', '.join(
            '{}={!r}'.format(name, getattr(self, name))
            for name in self.fields))


TraceRow = collections.namedtuple('TraceRow', (
    'epoch',            # k / n
    'residual',         # F(x_k) - F*, or F(x_k) when F* is unknown
    'f',
    'psi',
    'nnz',              # nonzero blocks
    'correct_nnz',      # nonzero in x_k and x* (None without x*)
    'incorrect_zeros',  # zero in x_k, nonzero in x* (None without x*)
    'elapsed_s',
))


class SolveReport:
    """
    Outcome of a solver run: the final iterate and objective, the
    trace, the number of iterations, and why the run stopped (`status`
    is 'target', 'stalled', or 'budget').
    """

    def __init__(self, x, trace, iterations, status, objective,
                 monotonicity_violations, elapsed_s, f_star=None):
        self.x = x
        self.trace = trace
        self.iterations = iterations
        self.status = status
        self.objective = objective
        self.monotonicity_violations = monotonicity_violations
        self.elapsed_s = elapsed_s
        self.f_star = f_star

    @property
    def residual(self):
        return None if self.f_star is None else self.objective - self.f_star

    def __repr__(self):
        return ('SolveReport(status={!r}, iterations={}, objective={!r}, '
                'violations={})').format(
                    self.status, self.iterations, self.objective,
                    self.monotonicity_violations)


##### Trace #####


class _Trace:
    """Trace rows and the decade levels of the residual."""

    def __init__(self, problem: CompositeProblem, state: SolverState):
        self.problem = problem
        self.n = problem.n
        self.rows = []
        self._last_k = None
        self.f_star = problem.f_star
        self.x_star = problem.x_star
        self.level = -math.inf
        if self.f_star is not None:
            self.xi0 = state.objective - self.f_star
            self.decade = 0
            self.advance(state.objective)

    def advance(self, objective):
        """Set `level` to the objective of the next decade not yet reached."""
        if self.f_star is None or not self.xi0 > 0:
            self.level = -math.inf
            return
        residual = objective - self.f_star
        while True:
            self.decade += 1
            scale = self.xi0 * 10.0 ** -self.decade
            if scale == 0:
                self.level = -math.inf
                return
            if residual > scale:
                self.level = self.f_star + scale
                return

    def record(self, state: SolverState, k, elapsed):
        if k == self._last_k:
            return
        self._last_k = k
        objective = state.objective
        residual = (objective if self.f_star is None
                    else objective - self.f_star)
        if self.x_star is None:
            (correct, incorrect) = (None, None)
        else:
            (correct, incorrect) = framework.support_counts(
                state.x, self.x_star, self.problem.partition)
        self.rows.append(TraceRow(
            k / self.n, residual, state.f_value, state.psi_value,
            state.nnz, correct, incorrect, elapsed))


##### Solver Loop #####


def _step_function(problem: CompositeProblem, state: SolverState, mode):
    """Return a function mapping block i to (t, Psi change)."""
    if mode == 'exact':
        def step(i):
            (t, _) = framework.exact_block_update(problem, state, i)
            return (t, 0.0)
    elif mode == 'smooth':
        oracle = problem.oracle
        lipschitz = problem.lipschitz_list
        if problem.partition.is_coordinate:
            weights = problem.norm_weights_list
        else:
            weights = [problem.norm.block_weights(i)
                       for i in range(problem.n)]

        def step(i):
            g = oracle.block_gradient(state, i)
            return (-sharp(g, weights[i]) / lipschitz[i], 0.0)
    else:
        def step(i):
            (t, _, psi_change) = framework.block_step(problem, state, i)
            return (t, psi_change)
    return step


def _solve(problem: CompositeProblem, law: ProbabilityLaw, x0,
           cfg: SolveConfig, observer=None, mode='model', substreams=(),
           name='RCDC') -> SolveReport:
    if cfg.target is not None and problem.f_star is None:
        raise ProblemError('A target residual needs a known optimal value')
    if cfg.exact_blocks:
        mode = 'exact'
    if x0 is None:
        x0 = numpy.zeros(problem.dim)
    n = problem.n
    sampler = law.resolve(problem.lipschitz)
    stream = UniformStream(new_prng(cfg.seed, cfg.stream, *substreams))
    state = framework.new_state(problem, x0)
    framework.freeze_blocks(problem, state)
    support = state.support
    step = _step_function(problem, state, mode)
    budget = cfg.iteration_budget(n)
    logger.info('Starting {} on {} blocks with {!r}: budget {} iterations',
                name, n, law, budget)

    trace = _Trace(problem, state)
    trace.record(state, 0, 0.0)
    if observer is not None:
        observer(state, 0)
    target_level = (-math.inf if cfg.target is None
                    else problem.f_star + cfg.target)
    threshold = max(trace.level, target_level)
    initial_objective = state.objective
    epoch_start_objective = initial_objective
    stall_tol = (None if cfg.min_epoch_decrease is None
                 else cfg.min_epoch_decrease * max(abs(initial_objective),
                                                   1e-300))
    violations = 0
    status = 'budget'
    elapsed = 0.0
    k = 0
    if initial_objective <= target_level:
        status = 'target'
        budget = 0

    clock = time.perf_counter()
    while k < budget:
        i = sampler.sample(stream, support, k)
        (t, psi_change) = step(i)
        before = state.objective
        framework.apply_block_update(problem, state, i, t, psi_change)
        k += 1
        after = state.objective
        if after > before + MONOTONICITY_SLACK * (1 + abs(before)):
            violations += 1
        if after <= threshold:
            if after <= target_level:
                elapsed += time.perf_counter() - clock
                status = 'target'
                break
            elapsed += time.perf_counter() - clock
            state.k = k
            trace.record(state, k, elapsed)
            trace.advance(after)
            threshold = max(trace.level, target_level)
            clock = time.perf_counter()
        if k % n == 0:
            elapsed += time.perf_counter() - clock
            state.k = k
            epoch = k // n
            if cfg.drift_every and epoch % cfg.drift_every == 0:
                framework.check_drift(problem, state, cfg.drift_tol)
            if cfg.trace_every and epoch % cfg.trace_every == 0:
                trace.record(state, k, elapsed)
            if observer is not None:
                observer(state, epoch)
            objective = state.objective
            logger.debug('Epoch {}: F = {!r}, nnz = {}',
                         epoch, objective, state.nnz)
            if (stall_tol is not None
                    and epoch_start_objective - objective <= stall_tol):
                status = 'stalled'
                break
            epoch_start_objective = objective
            clock = time.perf_counter()
    else:
        elapsed += time.perf_counter() - clock

    state.k = k
    trace.record(state, k, elapsed)
    if violations:
        logger.warning('{} iterations increased F by more than the '
                       'allowed slack', violations)
    logger.info('Finished {} ({}) after {} iterations ({:.3f} epochs) in '
                '{:.3f} s: F = {!r}', name, status, k, k / n, elapsed,
                state.objective)
    return SolveReport(state.x, trace.rows, k, status, state.objective,
                       violations, elapsed, problem.f_star)


def rcdc_run(problem: CompositeProblem, law: ProbabilityLaw, x0,
             cfg: SolveConfig, observer=None) -> SolveReport:
    """
    Randomized coordinate descent for composite functions.

    Each iteration samples block i according to `law` and moves x^(i)
    to the minimizer of the upper model V_i(x, .).  `x0` of None starts
    from zero.  `observer(state, epoch)`, if given, is called at the
    start and after every epoch.
    """
    return _solve(problem, law, x0, cfg, observer, name='RCDC')


def ucdc_run(problem: CompositeProblem, x0, cfg: SolveConfig,
             observer=None) -> SolveReport:
    """RCDC with uniform probabilities."""
    return _solve(problem, Uniform(), x0, cfg, observer, name='UCDC')


def rcds_run(problem: CompositeProblem, law: ProbabilityLaw, x0,
             cfg: SolveConfig, observer=None) -> SolveReport:
    """
    Randomized coordinate descent for smooth functions:
    x <- x - (1 / L_i) U_i (grad_i f(x))#.
    """
    if not problem.regularizer.is_zero:
        raise ProblemError('RCDS needs a smooth problem, not one with {!r}'
                           .format(problem.regularizer))
    return _solve(problem, law, x0, cfg, observer, mode='smooth',
                  name='RCDS')


##### Restarts and Regularization #####


class RestartReport:
    """Runs of a restart schedule and the best of them."""

    def __init__(self, runs, objectives, run_length):
        self.runs = runs
        self.objectives = objectives
        self.run_length = run_length
        self.best_index = int(numpy.argmin(objectives))

    @property
    def best(self) -> SolveReport:
        return self.runs[self.best_index]

    @property
    def x(self):
        return self.best.x

    @property
    def objective(self):
        return self.objectives[self.best_index]

    @property
    def iterations(self):
        return sum(run.iterations for run in self.runs)


def run_with_restarts(problem: CompositeProblem, law: ProbabilityLaw, x0,
                      cfg: SolveConfig, eps, rho, c, xi0) -> RestartReport:
    """
    Run r = ceil(log 1/rho) independent runs of k1 = ceil(e c / eps -
    c / xi0) iterations from `x0` and keep the one with the smallest F.

    `c` and `xi0` are the constant and initial value of the decrease
    property (i) of the residual sequence, e.g. c = 2n max(R^2, xi0).
    Each run draws from its own substream of the configured stream.
    """
    (runs, length) = bounds.restart_schedule(c, xi0, eps, rho)
    run_cfg = cfg.replace(max_iterations=length, target=None,
                          min_epoch_decrease=None)
    logger.info('Restarting {} times with {} iterations each', runs, length)
    reports = []
    objectives = []
    for run in range(runs):
        report = _solve(problem, law, x0, run_cfg, substreams=(run,),
                        name='RCDC run {}'.format(run))
        reports.append(report)
        objectives.append(framework.objective_at(problem, report.x))
    return RestartReport(reports, objectives, length)


class RegularizedReport:
    """
    Outcome of UCDC on F_mu = F + (mu / 2) ||x - x_0||_L^2: the run on
    F_mu, the weight mu, the iteration count the guarantee asks for (if
    computed), and F at the final iterate.
    """

    def __init__(self, report: SolveReport, mu, required_iterations,
                 objective, f_star=None):
        self.report = report
        self.mu = mu
        self.required_iterations = required_iterations
        self.objective = objective
        self.f_star = f_star

    @property
    def x(self):
        return self.report.x

    @property
    def residual(self):
        return None if self.f_star is None else self.objective - self.f_star


def regularized_run(problem: CompositeProblem, x0, eps, cfg: SolveConfig,
                    dist_sq, xi0=None, rho=0.1,
                    f_mu_lower=None) -> RegularizedReport:
    """
    Run UCDC on F_mu with mu = eps / ||x_0 - x*||_L^2 (`dist_sq`).

    The proximal term is block separable, so F_mu is again a composite
    function.  When `xi0` (F(x_0) - F*) is given the run lasts for the
    iteration count that makes F(x) - F* <= eps with probability at
    least 1 - rho; otherwise the configured budget applies.

    The run also stops once F_mu(x) - `f_mu_lower` <= eps / 2 when a
    lower bound `f_mu_lower` on min F_mu is given.  F* is one, since
    F_mu >= F.  Without it there is no target, only the budget.
    """
    mu = bounds.regularization_weight(eps, dist_sq)
    if x0 is None:
        x0 = numpy.zeros(problem.dim)
    center = as_vector(x0, problem.dim, 'x0')
    regularizer = ProximalRegularizer(
        problem.regularizer, mu, center, problem.lipschitz, problem.norm)
    regularized = problem.with_regularizer(regularizer)
    target = None
    if f_mu_lower is not None:
        regularized = CompositeProblem(regularized.oracle, regularizer,
                                       float(f_mu_lower))
        target = eps / 2
    if xi0 is not None:
        required = bounds.k_regularized(problem.n, dist_sq, xi0, eps, rho)
        run_cfg = cfg.replace(max_iterations=required, target=target,
                              min_epoch_decrease=None)
    else:
        required = None
        run_cfg = cfg.replace(target=target)
    logger.info('Regularizing with mu = {!r}', mu)
    report = _solve(regularized, Uniform(), center, run_cfg,
                    name='UCDC (regularized)')
    objective = framework.objective_at(problem, report.x)
    return RegularizedReport(report, mu, required, objective, problem.f_star)


##### Starting Points #####


def least_squares_start(problem: CompositeProblem, cfg: SolveConfig,
                        tol=1e-6):
    """
    Return an approximate minimizer of f alone, computed by RCDS from
    zero until the decrease over an epoch is at most `tol` |f(0)| or the
    budget runs out.
    """
    smooth = problem.with_regularizer(ZeroRegularizer())
    report = rcds_run(smooth, Uniform(), numpy.zeros(problem.dim),
                      cfg.replace(target=None, min_epoch_decrease=tol))
    logger.info('Least-squares start: f = {!r} after {} epochs ({})',
                report.objective, report.iterations / problem.n,
                report.status)
    return report.x


def random_start(problem: CompositeProblem, seed, stream=0, scale=1.0):
    """
    Return a random point with every coordinate nonzero, uniform in
    [-scale, scale].
    """
    prng = new_prng(seed, stream)
    x = prng.uniform(-1.0, 1.0, problem.dim)
    x[x == 0] = 1.0
    return scale * x


def segment_start(x_ls, theta):
    """Return theta x_LS, a point on the segment from zero to x_LS."""
    if not 0 <= theta <= 1:
        raise ValueError('Segment parameter must be in [0, 1]: {!r}'
                         .format(theta))
    return theta * as_vector(x_ls, name='x_ls')
