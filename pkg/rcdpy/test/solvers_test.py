"""Tests `solvers.py`."""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


import math
import unittest

import numpy

from .. import bounds
from .. import framework
from .. import lasso
from .. import solvers
from ..blocks import BlockPartition
from ..framework import (
    CompositeProblem,
    L1Regularizer,
    ProblemError,
    QuadraticOracle,
    ZeroRegularizer,
)
from ..sampling import Fixed, PowerLaw, QShrinking, SwitchingLaw, Uniform


def small_problem(lam=1.0, seed=1, m=60, n=20, nnz_a=600, nnz_x=5):
    return lasso.make_problem(
        lasso.generate_instance(m, n, nnz_a, nnz_x, lam, seed))


class SolveConfigTest(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ValueError):
            solvers.SolveConfig(max_epochs=0)
        with self.assertRaises(ValueError):
            solvers.SolveConfig(seed=-1)
        with self.assertRaises(ValueError):
            solvers.SolveConfig(target=0.0)
        with self.assertRaises(ValueError):
            solvers.SolveConfig(trace_every=-1)
        with self.assertRaises(ValueError):
            solvers.SolveConfig(drift_tol=0)

    def test_replace(self):
        cfg = solvers.SolveConfig(seed=3, max_epochs=5)
        other = cfg.replace(target=1e-3)
        self.assertEqual(3, other.seed)
        self.assertEqual(1e-3, other.target)
        self.assertIsNone(cfg.target)
        self.assertEqual(cfg, other.replace(target=None))
        with self.assertRaises(TypeError):
            cfg.replace(speed=11)

    def test_iteration_budget(self):
        self.assertEqual(25, solvers.SolveConfig(max_epochs=2.5)
                         .iteration_budget(10))
        self.assertEqual(7, solvers.SolveConfig(max_iterations=7)
                         .iteration_budget(10))


class RcdcTest(unittest.TestCase):

    def test_reaches_target(self):
        problem = small_problem()
        xi0 = framework.objective_at(problem, numpy.zeros(problem.dim)) \
            - problem.f_star
        cfg = solvers.SolveConfig(max_epochs=1000, target=1e-9 * xi0)
        report = solvers.ucdc_run(problem, None, cfg)
        self.assertEqual('target', report.status)
        self.assertLessEqual(report.residual, 1e-9 * xi0)
        self.assertEqual(0, report.monotonicity_violations)
        self.assertAlmostEqual(framework.objective_at(problem, report.x),
                               report.objective)

    def test_trace(self):
        problem = small_problem()
        cfg = solvers.SolveConfig(max_epochs=30, trace_every=10)
        report = solvers.ucdc_run(problem, None, cfg)
        trace = report.trace
        first = trace[0]
        self.assertEqual(0.0, first.epoch)
        self.assertAlmostEqual(
            framework.objective_at(problem, numpy.zeros(problem.dim))
            - problem.f_star, first.residual)
        self.assertEqual(0, first.nnz)
        self.assertEqual(0, first.correct_nnz)
        self.assertEqual(5, first.incorrect_zeros)
        self.assertEqual(0.0, first.elapsed_s)
        self.assertEqual(30.0, trace[-1].epoch)
        epochs = [row.epoch for row in trace]
        self.assertEqual(sorted(epochs), epochs)
        self.assertEqual(len(set(epochs)), len(epochs))
        for epoch in (10.0, 20.0, 30.0):
            self.assertIn(epoch, epochs)
        # Rows at decade crossings between the periodic rows
        self.assertGreater(len(trace), 4)
        elapsed = [row.elapsed_s for row in trace]
        self.assertEqual(sorted(elapsed), elapsed)
        for row in trace:
            self.assertEqual(row.correct_nnz + row.incorrect_zeros, 5)

    def test_decade_rows(self):
        problem = small_problem()
        cfg = solvers.SolveConfig(max_epochs=50, trace_every=0)
        report = solvers.ucdc_run(problem, None, cfg)
        xi0 = report.trace[0].residual
        final = max(report.trace[-1].residual, 0.0)
        levels = [xi0 * 10.0 ** -decade for decade in range(1, 30)
                  if xi0 * 10.0 ** -decade > 10 * final]
        self.assertGreater(len(levels), 2)
        for level in levels:
            crossings = [row for row in report.trace[1:-1]
                         if row.residual <= level]
            self.assertTrue(crossings, level)

    def test_reproducible(self):
        problem = small_problem()
        cfg = solvers.SolveConfig(seed=4, max_iterations=7)
        x1 = solvers.ucdc_run(problem, None, cfg).x
        x2 = solvers.ucdc_run(problem, None, cfg).x
        x3 = solvers.ucdc_run(problem, None, cfg.replace(stream=1)).x
        self.assertEqual(x1.tolist(), x2.tolist())
        self.assertNotEqual(x1.tolist(), x3.tolist())

    def test_x0_not_modified(self):
        problem = small_problem()
        x0 = numpy.ones(problem.dim)
        solvers.ucdc_run(problem, x0, solvers.SolveConfig(max_epochs=2))
        self.assertEqual([1.0] * problem.dim, x0.tolist())

    def test_target_met_at_start(self):
        problem = small_problem()
        cfg = solvers.SolveConfig(max_epochs=5, target=1e-6)
        report = solvers.ucdc_run(problem, problem.x_star, cfg)
        self.assertEqual('target', report.status)
        self.assertEqual(0, report.iterations)
        self.assertEqual(1, len(report.trace))

    def test_target_needs_optimal_value(self):
        problem = small_problem()
        unknown = CompositeProblem(problem.oracle, problem.regularizer)
        with self.assertRaises(ProblemError):
            solvers.ucdc_run(unknown, None,
                             solvers.SolveConfig(target=1e-3))

    def test_residual_without_optimal_value(self):
        problem = small_problem()
        unknown = CompositeProblem(problem.oracle, problem.regularizer)
        report = solvers.ucdc_run(unknown, None,
                                  solvers.SolveConfig(max_epochs=2))
        self.assertIsNone(report.residual)
        self.assertEqual(report.trace[-1].residual, report.objective)
        self.assertIsNone(report.trace[-1].correct_nnz)

    def test_stall(self):
        problem = small_problem()
        cfg = solvers.SolveConfig(max_epochs=1000, min_epoch_decrease=0.5)
        report = solvers.ucdc_run(problem, None, cfg)
        self.assertEqual('stalled', report.status)
        self.assertLess(report.iterations, 1000 * problem.n)
        self.assertEqual(0, report.iterations % problem.n)

    def test_budget(self):
        problem = small_problem()
        report = solvers.ucdc_run(problem, None,
                                  solvers.SolveConfig(max_iterations=33))
        self.assertEqual('budget', report.status)
        self.assertEqual(33, report.iterations)
        self.assertEqual(33 / problem.n, report.trace[-1].epoch)

    def test_observer(self):
        problem = small_problem()
        epochs = []
        solvers.ucdc_run(problem, None, solvers.SolveConfig(max_epochs=3),
                         lambda state, epoch: epochs.append(epoch))
        self.assertEqual([0, 1, 2, 3], epochs)

    def test_laws_descend(self):
        problem = small_problem()
        n = problem.n
        cfg = solvers.SolveConfig(max_epochs=20, seed=2)
        for law in (PowerLaw(1), PowerLaw(0.5), QShrinking(0.9, 2 * n),
                    SwitchingLaw(PowerLaw(1), Uniform(), 5 * n)):
            with self.subTest(law=law):
                report = solvers.rcdc_run(problem, law, None, cfg)
                self.assertEqual(0, report.monotonicity_violations)
                residuals = [row.residual for row in report.trace]
                self.assertLess(residuals[-1], residuals[0])

    def test_empty_column_frozen(self):
        problem = small_problem()
        A = problem.oracle.A.tolil()
        A[:, 3] = 0
        oracle = lasso.LassoOracle(A.tocsc(), problem.oracle.b)
        frozen = CompositeProblem(oracle, problem.regularizer)
        x0 = numpy.zeros(problem.dim)
        x0[3] = 2.0
        report = solvers.ucdc_run(frozen, x0,
                                  solvers.SolveConfig(max_epochs=3))
        self.assertEqual(0.0, report.x[3])


class RcdsTest(unittest.TestCase):

    def test_needs_smooth_problem(self):
        with self.assertRaises(ProblemError):
            solvers.rcds_run(small_problem(lam=1.0), Uniform(), None,
                             solvers.SolveConfig(max_epochs=1))

    def test_same_as_rcdc_when_smooth(self):
        problem = small_problem(lam=0.0)
        cfg = solvers.SolveConfig(max_epochs=5, seed=8)
        rcds = solvers.rcds_run(problem, PowerLaw(1), None, cfg)
        rcdc = solvers.rcdc_run(problem, PowerLaw(1), None, cfg)
        numpy.testing.assert_allclose(rcds.x, rcdc.x, rtol=1e-12, atol=1e-14)

    def test_exact_single_block(self):
        prng = numpy.random.default_rng(12)
        factor = prng.standard_normal((5, 5))
        Q = factor.T @ factor + numpy.eye(5)
        c = prng.standard_normal(5)
        oracle = QuadraticOracle(Q, c, BlockPartition.single(5))
        problem = CompositeProblem(oracle)
        report = solvers.rcdc_run(
            problem, Uniform(), None,
            solvers.SolveConfig(max_iterations=1, exact_blocks=True))
        numpy.testing.assert_allclose(numpy.linalg.solve(Q, c), report.x,
                                      rtol=1e-9)


def quadratic_problem(prng, sizes, lam):
    dim = sum(sizes)
    factor = prng.standard_normal((dim, dim))
    Q = factor.T @ factor + 0.1 * numpy.eye(dim)
    oracle = QuadraticOracle(Q, prng.standard_normal(dim),
                             BlockPartition(sizes))
    return CompositeProblem(
        oracle, L1Regularizer(lam) if lam > 0 else ZeroRegularizer())


def block_slice_value(partition, T, i):
    t = T[partition.block_slice(i)]
    return float(t[0]) if partition.is_coordinate else t


class OneStepExpectationTest(unittest.TestCase):
    """
    Averages F over the n possible next iterates of one block update and
    compares with the block models at the current iterate.  The models
    are exact for coordinate blocks of quadratics, so there the averages
    agree to rounding.
    """

    def next_objectives(self, problem, x):
        values = []
        for i in range(problem.n):
            state = framework.new_state(problem, x)
            (t, _) = framework.block_update(problem, state, i)
            framework.apply_block_update(problem, state, i, t)
            values.append(framework.objective_at(problem, state.x))
        return numpy.array(values)

    def model_gains(self, problem, state, T):
        partition = problem.partition
        gains = []
        for i in range(partition.n):
            t = block_slice_value(partition, T, i)
            zero = 0.0 if partition.is_coordinate else numpy.zeros_like(t)
            gains.append(framework.block_model(problem, state, i, t)
                         - framework.block_model(problem, state, i, zero))
        return numpy.array(gains)

    def problems(self):
        prng = numpy.random.default_rng(14)
        for n in (2, 3, 5):
            for lam in (0.0, 0.4):
                yield ('quadratic n={} lam={}'.format(n, lam),
                       quadratic_problem(prng, [1] * n, lam),
                       prng.standard_normal(n))
        for (seed, lam) in ((1, 1.0), (2, 0.0)):
            problem = small_problem(lam, seed, m=12, n=5, nnz_a=60, nnz_x=2)
            yield ('lasso seed={} lam={}'.format(seed, lam), problem,
                   prng.standard_normal(5))

    def test_uniform(self):
        for (name, problem, x) in self.problems():
            with self.subTest(name):
                n = problem.n
                state = framework.new_state(problem, x)
                F = framework.objective_at(problem, x)
                H = framework.eval_H(
                    problem, state, framework.full_update(problem, state))
                expected = H / n + (n - 1) / n * F
                mean = float(numpy.mean(self.next_objectives(problem, x)))
                self.assertAlmostEqual(expected, mean,
                                       delta=1e-10 * (1 + abs(expected)))

    def test_fixed_probabilities(self):
        prng = numpy.random.default_rng(15)
        for (name, problem, x) in self.problems():
            with self.subTest(name):
                p = prng.uniform(0.1, 1.0, problem.n)
                law = Fixed(p / p.sum()).resolve(problem.lipschitz)
                p = law.probabilities()
                state = framework.new_state(problem, x)
                T = framework.full_update(problem, state)
                F = framework.objective_at(problem, x)
                expected = F + float(p @ self.model_gains(problem, state, T))
                mean = float(p @ self.next_objectives(problem, x))
                self.assertAlmostEqual(expected, mean,
                                       delta=1e-10 * (1 + abs(expected)))

    def test_larger_blocks_bounded_by_models(self):
        prng = numpy.random.default_rng(16)
        for sizes in ([2, 1], [2, 3], [1, 2, 2]):
            with self.subTest(sizes=sizes):
                problem = quadratic_problem(prng, sizes, 0.3)
                x = prng.standard_normal(sum(sizes))
                n = problem.n
                state = framework.new_state(problem, x)
                F = framework.objective_at(problem, x)
                T = framework.full_update(problem, state)
                H = framework.eval_H(problem, state, T)
                gains = self.model_gains(problem, state, T)
                self.assertAlmostEqual(H - F, float(numpy.sum(gains)),
                                       delta=1e-10 * (1 + abs(H)))
                mean = float(numpy.mean(self.next_objectives(problem, x)))
                self.assertLessEqual(
                    mean, H / n + (n - 1) / n * F + 1e-10 * (1 + abs(F)))


class RestartTest(unittest.TestCase):

    def test_runs(self):
        problem = small_problem()
        for (rho, runs) in ((0.5, 1), (0.01, 5)):
            with self.subTest(rho=rho):
                report = solvers.run_with_restarts(
                    problem, Uniform(), None, solvers.SolveConfig(seed=3),
                    eps=1.0, rho=rho, c=2.0, xi0=1.0)
                self.assertEqual(runs, len(report.runs))
                self.assertEqual(4, report.run_length)
                self.assertEqual(4 * runs, report.iterations)
                self.assertEqual(min(report.objectives), report.objective)

    def test_runs_differ(self):
        problem = small_problem()
        report = solvers.run_with_restarts(
            problem, Uniform(), None, solvers.SolveConfig(seed=3),
            eps=1.0, rho=0.05, c=2.0, xi0=1.0)
        self.assertGreater(len(set(report.objectives)), 1)


class RegularizedTest(unittest.TestCase):

    def test_weight(self):
        problem = small_problem()
        report = solvers.regularized_run(
            problem, None, 1.0, solvers.SolveConfig(max_epochs=3),
            dist_sq=4.0)
        self.assertEqual(0.25, report.mu)
        self.assertIsNone(report.required_iterations)
        self.assertAlmostEqual(framework.objective_at(problem, report.x),
                               report.objective)
        self.assertEqual(0, report.report.monotonicity_violations)

    def test_required_iterations(self):
        problem = small_problem()
        x0 = numpy.zeros(problem.dim)
        xi0 = framework.objective_at(problem, x0) - problem.f_star
        dist_sq = bounds.level_set_radius_sq_surrogate(
            x0, problem.x_star, problem.lipschitz, problem.partition)
        eps = 1e-2 * xi0
        report = solvers.regularized_run(
            problem, x0, eps, solvers.SolveConfig(), dist_sq, xi0, rho=0.1)
        required = bounds.k_regularized(problem.n, dist_sq, xi0, eps, 0.1)
        self.assertEqual(required, report.required_iterations)
        self.assertEqual(required, report.report.iterations)
        self.assertLessEqual(report.residual, eps)

    def test_half_eps_target(self):
        problem = small_problem()
        x0 = numpy.zeros(problem.dim)
        xi0 = framework.objective_at(problem, x0) - problem.f_star
        dist_sq = bounds.level_set_radius_sq_surrogate(
            x0, problem.x_star, problem.lipschitz, problem.partition)
        eps = 1e-2 * xi0
        cfg = solvers.SolveConfig(max_epochs=1000)
        report = solvers.regularized_run(problem, x0, eps, cfg, dist_sq,
                                         f_mu_lower=problem.f_star)
        self.assertEqual('target', report.report.status)
        self.assertLess(report.report.iterations, 1000 * problem.n)
        self.assertLessEqual(report.report.objective - problem.f_star,
                             eps / 2)
        # F <= F_mu
        self.assertLessEqual(report.residual, eps / 2)
        budget = solvers.regularized_run(problem, x0, eps,
                                         cfg.replace(max_epochs=2), dist_sq)
        self.assertEqual('budget', budget.report.status)


class StartTest(unittest.TestCase):

    def test_least_squares_start(self):
        problem = small_problem(lam=1.0)
        x_ls = solvers.least_squares_start(problem,
                                           solvers.SolveConfig(max_epochs=200))
        # x* minimizes f + Psi, not f, so f is larger there
        self.assertLess(problem.oracle.value_at(x_ls),
                        problem.oracle.value_at(problem.x_star))
        self.assertEqual(problem.dim, len(x_ls))

    def test_random_start(self):
        problem = small_problem()
        x0 = solvers.random_start(problem, seed=1, scale=2.0)
        self.assertEqual(problem.dim, len(x0))
        self.assertTrue(numpy.all(x0 != 0))
        self.assertTrue(numpy.all(numpy.abs(x0) <= 2.0))
        numpy.testing.assert_array_equal(
            x0, solvers.random_start(problem, seed=1, scale=2.0))

    def test_segment_start(self):
        x = numpy.array([2.0, -4.0])
        self.assertEqual([1.0, -2.0], solvers.segment_start(x, 0.5).tolist())
        with self.assertRaises(ValueError):
            solvers.segment_start(x, 1.5)


class ConvergenceRateTest(unittest.TestCase):

    def test_strongly_convex_envelope(self):
        instance = lasso.generate_instance(200, 100, 4000, 20, 0.0, seed=21)
        problem = lasso.make_problem(instance)
        hessian = (instance.A.T @ instance.A).toarray()
        mu = bounds.strong_convexity_parameter(hessian, problem.lipschitz)
        self.assertGreater(mu, 0)
        factor = 1 - (1 - bounds.gamma_mu(mu)) / problem.n
        seeds = 200
        epochs = 10
        traces = []
        for seed in range(seeds):
            report = solvers.ucdc_run(problem, None, solvers.SolveConfig(
                seed=seed, max_epochs=epochs, trace_every=1))
            traces.append({row.epoch: row.residual for row in report.trace})
        xi0 = traces[0][0.0]
        for epoch in range(epochs + 1):
            mean = numpy.mean([trace[float(epoch)] for trace in traces])
            envelope = factor ** (epoch * problem.n) * xi0
            self.assertLessEqual(mean, 1.05 * envelope, epoch)

    def test_high_probability_convex(self):
        instance = lasso.generate_instance(100, 50, 1000, 10, 1.0, seed=22)
        problem = lasso.make_problem(instance)
        x0 = numpy.zeros(problem.dim)
        xi0 = instance.objective(x0) - instance.f_star
        R_sq = bounds.level_set_radius_sq_surrogate(
            x0, instance.x_star, problem.lipschitz, problem.partition)
        eps = 0.1 * xi0
        (K, _) = bounds.k_ucdc_convex(problem.n, R_sq, xi0, eps, 0.1)
        seeds = 500
        successes = 0
        for seed in range(seeds):
            report = solvers.ucdc_run(problem, None, solvers.SolveConfig(
                seed=seed, max_iterations=K, target=eps, trace_every=0,
                drift_every=0))
            successes += report.residual <= eps
        sigma = math.sqrt(0.9 * 0.1 / seeds)
        self.assertGreaterEqual(successes / seeds, 0.9 - 3 * sigma)
