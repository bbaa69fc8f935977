"""
Composite problems F(x) = f(x) + Psi(x) and the exact block update.

A problem pairs a smooth oracle, which owns f, its block gradients, the
block Lipschitz constants L_i, and every cache needed to evaluate them
cheaply, with a block-separable regularizer Psi, which knows how to
minimize the per-block upper model

    V_i(x, t) = <grad_i f(x), t> + (L_i / 2) ||t||_(i)^2 + Psi_i(x^(i) + t)

exactly.  The solver state holds the iterate, the oracle's caches, and
incrementally maintained values of f and Psi.  The oracle's `apply_step`
is the only thing that mutates the iterate and the caches.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from __future__ import annotations

import abc

import numpy
import scipy.linalg

from . import logging
from .blocks import BlockNorm, BlockPartition
from .numpy_utils import as_vector
from .sampling import SupportSet


logger = logging.getLogger(__name__, '{')


##### Errors #####


class ProblemError(ValueError):
    """Inconsistent problem data or an operation the problem can't do."""


class NumericalDriftError(ArithmeticError):
    """
    Incrementally maintained values drifted from their from-scratch
    recomputation by more than the tolerance.
    """

    def __init__(self, message, discrepancy, iteration):
        super().__init__(message, discrepancy, iteration)
        self.message = message
        self.discrepancy = discrepancy
        self.iteration = iteration

    def __str__(self):
        return '{}: relative discrepancy {:.3e} at iteration {}'.format(
            self.message, self.discrepancy, self.iteration)


##### Solver State #####


class SolverState:
    """
    Iterate x_k with the oracle's caches, incrementally maintained f(x_k)
    and Psi(x_k), the iteration counter, and the set of nonzero blocks.

    A state belongs to a single solver run.
    """

    def __init__(self, x, cache, f_value, psi_value, support: SupportSet,
                 frozen_nnz=0):
        self.x = x
        self.cache = cache
        self.f_value = f_value
        self.psi_value = psi_value
        self.support = support
        self.frozen_nnz = frozen_nnz
        self.k = 0

    @property
    def objective(self):
        return self.f_value + self.psi_value

    @property
    def nnz(self):
        """Number of nonzero blocks."""
        return len(self.support) + self.frozen_nnz


def block_nonzero(x, partition: BlockPartition):
    """Return whether each block of `x` has a nonzero entry."""
    nonzero = x != 0
    if partition.is_coordinate:
        return nonzero
    return numpy.add.reduceat(nonzero, partition.offsets) > 0


##### Smooth Oracles #####


class SmoothOracle(abc.ABC):
    """
    Smooth part f of a composite objective.

    Subclasses keep all problem caches (residuals, margins, gradients) in
    `state.cache` and update them only in `apply_step`.  `touches`
    counts the floating-point data entries read or written by
    `block_gradient` and `apply_step`.
    """

    def __init__(self, partition: BlockPartition, norm: BlockNorm=None):
        if norm is None:
            norm = BlockNorm.euclidean(partition)
        elif norm.partition != partition:
            raise ProblemError('Block norm defined on a different partition')
        self._partition = partition
        self._norm = norm
        self.touches = 0

    @property
    def partition(self):
        return self._partition

    @property
    def norm(self):
        return self._norm

    @property
    @abc.abstractmethod
    def lipschitz_constants(self) -> numpy.ndarray:
        """Block Lipschitz constants L_1, ..., L_n."""

    def lipschitz(self, i):
        return float(self.lipschitz_constants[i])

    @abc.abstractmethod
    def new_cache(self, x):
        """Compute the caches for iterate `x` from scratch."""

    @abc.abstractmethod
    def value(self, state) -> float:
        """f(x) from the cached state."""

    @abc.abstractmethod
    def value_at(self, x) -> float:
        """f(x) from scratch."""

    @abc.abstractmethod
    def block_gradient(self, state, i):
        """
        grad_i f(x): a float for singleton blocks, otherwise a new
        array.
        """

    @abc.abstractmethod
    def apply_step(self, state, i, t) -> float:
        """
        Commit x <- x + U_i t, update the caches and the support, and
        return f(x + U_i t) - f(x).
        """

    def gradient(self, state):
        """Full gradient assembled from the block gradients."""
        grad = numpy.empty(self._partition.dim)
        for i in range(self._partition.n):
            grad[self._partition.block_slice(i)] = self.block_gradient(
                state, i)
        return grad

    def refresh(self, state) -> float:
        """
        Recompute the caches from scratch and return their relative
        discrepancy from the incrementally maintained ones.
        """
        fresh = self.new_cache(state.x)
        scale = max(1.0, float(numpy.max(numpy.abs(fresh), initial=0.0)))
        gap = float(numpy.max(numpy.abs(fresh - state.cache), initial=0.0))
        state.cache = fresh
        return gap / scale

    def update_support(self, state, i):
        sl = self._partition.block_slice(i)
        state.support.update(i, bool(numpy.any(state.x[sl] != 0)))


class QuadraticOracle(SmoothOracle):
    """
    Dense quadratic f(x) = 1/2 x'Qx - c'x + constant with symmetric
    positive semidefinite Q.

    The block Lipschitz constant with respect to the diagonal block norm
    B_i is the largest eigenvalue of B_i^(-1/2) Q_ii B_i^(-1/2).  The
    cache is the full gradient Qx - c.
    """

    def __init__(self, Q, c, partition: BlockPartition=None,
                 norm: BlockNorm=None, constant=0.0):
        Q = numpy.array(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ProblemError('Q must be square, not {}'.format(Q.shape))
        if not numpy.allclose(Q, Q.T, rtol=1e-12, atol=1e-12):
            raise ProblemError('Q must be symmetric')
        if partition is None:
            partition = BlockPartition.coordinate(Q.shape[0])
        super().__init__(partition, norm)
        self.Q = Q
        self.c = as_vector(c, partition.dim, 'c')
        self.constant = float(constant)
        lipschitz = numpy.empty(partition.n)
        for i in range(partition.n):
            sl = partition.block_slice(i)
            scale = 1 / numpy.sqrt(self.norm.weights[sl])
            block = Q[sl, sl] * numpy.outer(scale, scale)
            top = scipy.linalg.eigh(block, eigvals_only=True)[-1]
            lipschitz[i] = max(float(top), 0.0)
        lipschitz.flags.writeable = False
        self._lipschitz = lipschitz

    @property
    def lipschitz_constants(self):
        return self._lipschitz

    def new_cache(self, x):
        return self.Q @ x - self.c

    def value(self, state):
        return (0.5 * float(numpy.dot(state.x, state.cache - self.c))
                + self.constant)

    def value_at(self, x):
        return (0.5 * float(x @ self.Q @ x) - float(numpy.dot(self.c, x))
                + self.constant)

    def block_gradient(self, state, i):
        sl = self._partition.block_slice(i)
        self.touches += sl.stop - sl.start
        if self._partition.is_coordinate:
            return float(state.cache[i])
        return state.cache[sl].copy()

    def block_hessian(self, i):
        sl = self._partition.block_slice(i)
        return self.Q[sl, sl]

    def apply_step(self, state, i, t):
        sl = self._partition.block_slice(i)
        t_vec = numpy.atleast_1d(numpy.asarray(t, dtype=float))
        grad = state.cache
        delta = (float(numpy.dot(grad[sl], t_vec))
                 + 0.5 * float(t_vec @ self.Q[sl, sl] @ t_vec))
        state.x[sl] += t_vec
        grad += self.Q[:, sl] @ t_vec
        self.touches += self._partition.dim * len(t_vec)
        self.update_support(state, i)
        return delta


##### Separable Regularizers #####


class SeparableRegularizer(abc.ABC):
    """
    Block-separable convex function Psi(x) = sum_i Psi_i(x^(i)).

    Block arguments are floats for singleton blocks and arrays
    otherwise; `b_i` are the diagonal weights of the block norm.
    """

    is_zero = False

    @abc.abstractmethod
    def block_value(self, i, v) -> float:
        """Psi_i(v)."""

    @abc.abstractmethod
    def block_minimize(self, i, x_i, g_i, L_i, b_i):
        """Return the step t minimizing V_i(x, t)."""

    def block_argmin(self, i, x_i, b_i):
        """
        Return the step t moving x^(i) to a minimizer of Psi_i, the
        update of a block with L_i = 0 and zero gradient.
        """
        raise ProblemError('{} has no block minimizer for frozen blocks'
                           .format(type(self).__name__))

    def value(self, x, partition: BlockPartition) -> float:
        return sum(self.block_value(i, x[partition.block_slice(i)])
                   for i in range(partition.n))


class ZeroRegularizer(SeparableRegularizer):
    """Psi = 0, the smooth case."""

    is_zero = True

    def block_value(self, i, v):
        return 0.0

    def block_minimize(self, i, x_i, g_i, L_i, b_i):
        # -(1 / L_i) g#
        return -(g_i / b_i) / L_i

    def block_argmin(self, i, x_i, b_i):
        return x_i * 0.0

    def value(self, x, partition):
        return 0.0

    def __repr__(self):
        return 'ZeroRegularizer()'


def soft_threshold(x_i, alpha, lam, L_i):
    """
    Return the minimizer t of alpha t + (L_i / 2) t^2 + lam |x_i + t|.

    Exactly one of three branches applies: x_i + t lands above zero,
    below zero, or at zero.  Ties go to landing at zero.
    """
    if not L_i > 0:
        raise ValueError('Curvature must be positive: {!r}'.format(L_i))
    step = (alpha + lam) / L_i
    if x_i - step > 0:
        return -step
    step = (alpha - lam) / L_i
    if x_i - step < 0:
        return -step
    return -x_i


def soft_threshold_vector(x, alpha, lam, curvature):
    """Elementwise `soft_threshold` for arrays of coordinates."""
    if not numpy.all(curvature > 0):
        raise ValueError('Curvature must be positive')
    upper = (alpha + lam) / curvature
    lower = (alpha - lam) / curvature
    return numpy.where(x - upper > 0, -upper,
                       numpy.where(x - lower < 0, -lower, -x))


class L1Regularizer(SeparableRegularizer):
    """Psi(x) = lam ||x||_1, separable down to single coordinates."""

    def __init__(self, lam):
        if not lam >= 0:
            raise ValueError('L1 weight must be nonnegative: {!r}'
                             .format(lam))
        self.lam = float(lam)

    def block_value(self, i, v):
        if isinstance(v, float):
            return self.lam * abs(v)
        return self.lam * float(numpy.sum(numpy.abs(v)))

    def block_minimize(self, i, x_i, g_i, L_i, b_i):
        if isinstance(x_i, float):
            return soft_threshold(x_i, g_i, self.lam, L_i * b_i)
        return soft_threshold_vector(x_i, g_i, self.lam, L_i * b_i)

    def block_argmin(self, i, x_i, b_i):
        return -x_i if self.lam > 0 else x_i * 0.0

    def value(self, x, partition):
        return self.lam * float(numpy.sum(numpy.abs(x)))

    def __repr__(self):
        return 'L1Regularizer({!r})'.format(self.lam)


class ProximalRegularizer(SeparableRegularizer):
    """
    Psi_mu(x) = Psi(x) + (mu / 2) ||x - x0||_L^2, which keeps Psi's
    block separability.

    Its block minimizer is the base minimizer with the linear term
    shifted by mu L_i B_i (x_i - x0_i) and the curvature scaled by
    (1 + mu).
    """

    def __init__(self, base: SeparableRegularizer, mu, center, lipschitz,
                 norm: BlockNorm):
        if not mu > 0:
            raise ValueError('Proximal weight must be positive: {!r}'
                             .format(mu))
        self.base = base
        self.mu = float(mu)
        self.center = as_vector(center, norm.partition.dim, 'center')
        self.lipschitz = numpy.asarray(lipschitz, dtype=float)
        self.norm = norm
        self._weights = (norm.partition.expand(self.lipschitz)
                         * norm.weights)

    def _center(self, i):
        partition = self.norm.partition
        if partition.is_coordinate:
            return float(self.center[i])
        return self.center[partition.block_slice(i)]

    def block_value(self, i, v):
        d = v - self._center(i)
        b = (float(self.norm.weights[i]) if isinstance(v, float)
             else self.norm.block_weights(i))
        quad = float(numpy.dot(b * d, d))
        return (self.base.block_value(i, v)
                + 0.5 * self.mu * float(self.lipschitz[i]) * quad)

    def block_minimize(self, i, x_i, g_i, L_i, b_i):
        weight = self.mu * float(self.lipschitz[i])
        shifted = g_i + weight * b_i * (x_i - self._center(i))
        return self.base.block_minimize(i, x_i, shifted, L_i + weight, b_i)

    def block_argmin(self, i, x_i, b_i):
        return self.base.block_argmin(i, x_i, b_i)

    def value(self, x, partition):
        d = x - self.center
        return (self.base.value(x, partition)
                + 0.5 * self.mu * float(numpy.dot(self._weights * d, d)))

    def __repr__(self):
        return 'ProximalRegularizer({!r}, mu={!r})'.format(
            self.base, self.mu)


##### Problems #####


class CompositeProblem:
    """
    F = f + Psi: a smooth oracle and a separable regularizer on the
    oracle's block partition and block norm, optionally with a known
    optimal value `f_star` and minimizer `x_star`.

    Problems are not mutated by solvers; any number of solver states can
    share one problem.
    """

    def __init__(self, oracle: SmoothOracle,
                 regularizer: SeparableRegularizer=None,
                 f_star=None, x_star=None):
        self.oracle = oracle
        self.f_star = None if f_star is None else float(f_star)
        self.x_star = (None if x_star is None
                       else as_vector(x_star, oracle.partition.dim, 'x_star'))
        self.regularizer = (regularizer if regularizer is not None
                            else ZeroRegularizer())
        lipschitz = numpy.array(oracle.lipschitz_constants, dtype=float)
        if lipschitz.shape != (oracle.partition.n,):
            raise ProblemError('Expected {} Lipschitz constants, got shape '
                               '{}'.format(oracle.partition.n,
                                           lipschitz.shape))
        if numpy.any(lipschitz < 0) or not numpy.all(
                numpy.isfinite(lipschitz)):
            raise ProblemError('Lipschitz constants must be finite and '
                               'nonnegative')
        lipschitz.flags.writeable = False
        self.lipschitz = lipschitz
        # Plain lists for fast scalar access in solver loops
        self.lipschitz_list = lipschitz.tolist()
        self.norm_weights_list = (oracle.norm.weights.tolist()
                                  if oracle.partition.is_coordinate
                                  else None)

    @property
    def partition(self):
        return self.oracle.partition

    @property
    def norm(self):
        return self.oracle.norm

    @property
    def n(self):
        return self.oracle.partition.n

    @property
    def dim(self):
        return self.oracle.partition.dim

    @property
    def frozen_blocks(self):
        return numpy.flatnonzero(self.lipschitz == 0)

    def with_regularizer(self, regularizer: SeparableRegularizer):
        return CompositeProblem(self.oracle, regularizer)


def new_state(problem: CompositeProblem, x0) -> SolverState:
    """Return a fresh solver state at iterate `x0` (copied)."""
    x = as_vector(x0, problem.dim, 'x0')
    oracle = problem.oracle
    cache = oracle.new_cache(x)
    support = SupportSet(problem.n, tracked=problem.lipschitz > 0)
    nonzero = block_nonzero(x, problem.partition)
    for i in numpy.flatnonzero(nonzero).tolist():
        support.add(i)
    frozen_nnz = int(numpy.count_nonzero(nonzero & (problem.lipschitz == 0)))
    state = SolverState(x, cache, 0.0, 0.0, support, frozen_nnz)
    state.f_value = oracle.value(state)
    state.psi_value = problem.regularizer.value(x, problem.partition)
    return state


##### Block Updates #####


def _block_args(problem, state, i):
    if problem.partition.is_coordinate:
        return float(state.x[i]), problem.norm_weights_list[i]
    sl = problem.partition.block_slice(i)
    return state.x[sl].copy(), problem.norm.weights[sl]


def _model_terms(g, t, L_i, b_i):
    if isinstance(t, float):
        return g * t + 0.5 * L_i * b_i * t * t
    return float(numpy.dot(g, t)) + 0.5 * L_i * float(numpy.dot(b_i * t, t))


def block_step(problem: CompositeProblem, state: SolverState, i):
    """
    Return (t, decrease bound, Psi change) for block i, the pieces a
    solver loop needs to commit the update without recomputing Psi.
    """
    L_i = problem.lipschitz_list[i]
    if not L_i > 0:
        raise ProblemError('Block {} has a zero Lipschitz constant and '
                           'cannot be sampled'.format(i))
    g = problem.oracle.block_gradient(state, i)
    (x_i, b_i) = _block_args(problem, state, i)
    reg = problem.regularizer
    t = reg.block_minimize(i, x_i, g, L_i, b_i)
    psi_change = reg.block_value(i, x_i + t) - reg.block_value(i, x_i)
    decrease = -(_model_terms(g, t, L_i, b_i) + psi_change)
    return (t, max(decrease, 0.0), psi_change)


def block_update(problem: CompositeProblem, state: SolverState, i):
    """
    Return (t, decrease bound) where t = T^(i)(x) minimizes V_i(x, .)
    and the decrease bound is V_i(x, 0) - V_i(x, t) >= 0.
    """
    (t, decrease, _) = block_step(problem, state, i)
    return (t, decrease)


def exact_block_update(problem: CompositeProblem, state: SolverState, i):
    """
    Return (t, decrease) where t minimizes F(x + U_i t) exactly.

    Requires a quadratic oracle (one with `block_hessian`) and Psi = 0.
    The decrease is the actual decrease F(x) - F(x + U_i t).
    """
    oracle = problem.oracle
    if not problem.regularizer.is_zero or not hasattr(
            oracle, 'block_hessian'):
        raise ProblemError('Exact block minimization needs a quadratic '
                           'oracle and a zero regularizer')
    if not problem.lipschitz_list[i] > 0:
        raise ProblemError('Block {} has a zero Lipschitz constant and '
                           'cannot be sampled'.format(i))
    g = numpy.atleast_1d(oracle.block_gradient(state, i))
    t = -scipy.linalg.solve(oracle.block_hessian(i), g, assume_a='pos')
    decrease = -0.5 * float(numpy.dot(g, t))
    if problem.partition.is_coordinate:
        t = float(t[0])
    return (t, max(decrease, 0.0))


def block_model(problem: CompositeProblem, state: SolverState, i, t):
    """V_i(x, t) for block i."""
    g = problem.oracle.block_gradient(state, i)
    (x_i, b_i) = _block_args(problem, state, i)
    return (_model_terms(g, t, problem.lipschitz_list[i], b_i)
            + problem.regularizer.block_value(i, x_i + t))


def apply_block_update(problem: CompositeProblem, state: SolverState, i, t,
                       psi_change=None):
    """
    Commit x <- x + U_i t through the oracle and update the maintained
    values of f and Psi.  Return the change in F.
    """
    if psi_change is None:
        (x_i, _) = _block_args(problem, state, i)
        reg = problem.regularizer
        psi_change = reg.block_value(i, x_i + t) - reg.block_value(i, x_i)
    delta_f = problem.oracle.apply_step(state, i, t)
    state.f_value += delta_f
    state.psi_value += psi_change
    return delta_f + psi_change


def full_update(problem: CompositeProblem, state: SolverState):
    """Return T(x), the stacked block updates of all blocks."""
    partition = problem.partition
    T = numpy.zeros(partition.dim)
    for i in range(partition.n):
        if problem.lipschitz_list[i] > 0:
            (t, _, _) = block_step(problem, state, i)
        else:
            (x_i, b_i) = _block_args(problem, state, i)
            t = problem.regularizer.block_argmin(i, x_i, b_i)
        T[partition.block_slice(i)] = t
    return T


def freeze_blocks(problem: CompositeProblem, state: SolverState):
    """
    Move every block with L_i = 0 to a minimizer of Psi_i.

    The gradient of such a block is constant, and it must be zero for
    the problem to be bounded below, so this single update is exact and
    the block never needs to be sampled again.
    """
    frozen = problem.frozen_blocks
    if len(frozen) == 0:
        return
    reg = problem.regularizer
    for i in frozen.tolist():
        g = problem.oracle.block_gradient(state, i)
        if numpy.any(numpy.asarray(g) != 0):
            raise ProblemError('Block {} has a zero Lipschitz constant but '
                               'a nonzero gradient'.format(i))
        (x_i, b_i) = _block_args(problem, state, i)
        t = reg.block_argmin(i, x_i, b_i)
        if numpy.any(numpy.asarray(t) != 0):
            apply_block_update(problem, state, i, t)
    nonzero = block_nonzero(state.x, problem.partition)
    state.frozen_nnz = int(numpy.count_nonzero(nonzero[frozen]))
    logger.info('Froze {} blocks with zero Lipschitz constants', len(frozen))


##### Objective Evaluation #####


def full_objective(problem: CompositeProblem, state: SolverState) -> float:
    """F(x) computed from scratch, bypassing all caches."""
    return objective_at(problem, state.x)


def objective_at(problem: CompositeProblem, x) -> float:
    """F(x) for an arbitrary point, without a solver state."""
    problem.partition.check_vector(x)
    return (problem.oracle.value_at(x)
            + problem.regularizer.value(x, problem.partition))


def support_counts(x, x_star, partition: BlockPartition=None):
    """
    Return (correct nonzeros, incorrect zeros): the number of blocks
    nonzero in both `x` and `x_star`, and the number of blocks zero in
    `x` but nonzero in `x_star`.
    """
    if partition is None:
        (x_nz, star_nz) = (numpy.asarray(x) != 0, numpy.asarray(x_star) != 0)
    else:
        x_nz = block_nonzero(numpy.asarray(x), partition)
        star_nz = block_nonzero(numpy.asarray(x_star), partition)
    if x_nz.shape != star_nz.shape:
        raise ValueError('Dimension mismatch: {} vs {}'.format(
            x_nz.shape, star_nz.shape))
    correct = int(numpy.count_nonzero(x_nz & star_nz))
    return (correct, int(numpy.count_nonzero(star_nz)) - correct)


def eval_H(problem: CompositeProblem, state: SolverState, T) -> float:
    """
    H(x, T) = f(x) + <grad f(x), T> + 1/2 ||T||_L^2 + Psi(x + T).
    """
    partition = problem.partition
    partition.check_vector(T)
    grad = problem.oracle.gradient(state)
    weights = partition.expand(problem.lipschitz) * problem.norm.weights
    return (problem.oracle.value(state)
            + float(numpy.dot(grad, T))
            + 0.5 * float(numpy.dot(weights * T, T))
            + problem.regularizer.value(state.x + T, partition))


def check_drift(problem: CompositeProblem, state: SolverState,
                tol=1e-9) -> float:
    """
    Recompute the caches, f, and Psi from scratch, reconcile the state
    with them, and return the largest relative discrepancy found.

    Raise `NumericalDriftError` if a discrepancy exceeds `tol`.
    """
    maintained = state.objective
    cache_gap = problem.oracle.refresh(state)
    f_value = problem.oracle.value(state)
    psi_value = problem.regularizer.value(state.x, problem.partition)
    fresh = f_value + psi_value
    gap = abs(maintained - fresh) / max(1.0, abs(fresh))
    if cache_gap > tol:
        raise NumericalDriftError(
            'Cached residuals drifted', cache_gap, state.k)
    if gap > tol:
        raise NumericalDriftError('Objective value drifted', gap, state.k)
    state.f_value = f_value
    state.psi_value = psi_value
    return max(gap, cache_gap)
