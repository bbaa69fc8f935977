"""
Iteration complexity bounds for randomized coordinate descent.

Every bound answers the same question: how many iterations k make
P(F(x_k) - F* <= eps) >= 1 - rho.  Each bound has a real-valued form
(`*_real`, for plotting) and an integer form, the smallest nonnegative
integer at least the real value.  Preconditions on the inputs are
checked and violations raise `ValueError`.

Symbols:

* `n`: number of blocks
* `eps`: target accuracy
* `rho`: target confidence, 0 < rho < 1
* `xi0`: initial residual F(x_0) - F* (or f(x_0) - f*)
* `R_sq`: squared level-set radius R_W(x_0)^2 for the relevant weights
* `mu`: strong convexity parameter for the relevant norm
* `c`: the constant of a decreasing random sequence

Besides the bounds themselves the module computes the inputs that can be
computed (strong convexity parameters of quadratics, radius surrogates
from a known minimizer) and simulates the random sequences the generic
bound is about, for validating it.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from __future__ import annotations

import math

import numpy
import scipy.linalg

from . import logging
from .blocks import BlockNorm, BlockPartition, norm_w
from .numpy_utils import new_prng


logger = logging.getLogger(__name__, '{')


##### Helpers #####


def ceil_count(value) -> int:
    """
    Return the smallest nonnegative integer at least `value`.

    Values within floating-point noise of an integer are taken to be
    that integer so that, e.g., 100 * (1 + log e) + 2 - 10 gives 192 and
    not 193.
    """
    if not math.isfinite(value):
        raise ValueError('Iteration count is not finite: {!r}'.format(value))
    nearest = round(value)
    if abs(value - nearest) <= 1e-9 * max(1.0, abs(value)):
        count = int(nearest)
    else:
        count = math.ceil(value)
    return max(count, 0)


def _check_eps_rho(eps, rho):
    if not eps > 0:
        raise ValueError('Target accuracy must be positive: {!r}'.format(eps))
    if not 0 < rho < 1:
        raise ValueError('Confidence must be in (0, 1): {!r}'.format(rho))


def _check_positive(name, value):
    if not value > 0:
        raise ValueError('{} must be positive: {!r}'.format(name, value))


##### Generic Decreasing Sequences #####


def k_theorem1_real(c, xi0, eps, rho, property='i'):
    """
    Iterations after which a nonnegative nonincreasing random sequence
    with E[xi_(k+1) | xi_k] <= xi_k - xi_k^2 / c (property 'i') or
    E[xi_(k+1) | xi_k] <= (1 - 1/c) xi_k while xi_k >= eps (property
    'ii') is below `eps` with probability at least 1 - rho.
    """
    _check_eps_rho(eps, rho)
    _check_positive('Initial value', xi0)
    if not eps < xi0:
        raise ValueError('Target accuracy must be less than the initial '
                         'value: {!r} >= {!r}'.format(eps, xi0))
    if property == 'i':
        _check_positive('Constant', c)
        if not eps < c:
            raise ValueError('Property (i) needs eps < c: {!r} >= {!r}'
                             .format(eps, c))
        return (c / eps) * (1 + math.log(1 / rho)) + 2 - c / xi0
    elif property == 'ii':
        if not c > 1:
            raise ValueError('Property (ii) needs c > 1: {!r}'.format(c))
        return c * math.log(xi0 / (eps * rho))
    raise ValueError("Property must be 'i' or 'ii': {!r}".format(property))


def k_theorem1(c, xi0, eps, rho, property='i') -> int:
    return ceil_count(k_theorem1_real(c, xi0, eps, rho, property))


def restart_schedule(c, xi0, eps, rho) -> tuple[int, int]:
    """
    Return (r, k1) for restarting under property (i): r = ceil(log 1/rho)
    independent runs of k1 = ceil(e c / eps - c / xi0) iterations each,
    after which the best run is within `eps` with probability at least
    1 - rho.
    """
    _check_eps_rho(eps, rho)
    _check_positive('Constant', c)
    _check_positive('Initial value', xi0)
    runs = max(ceil_count(math.log(1 / rho)), 1)
    length = ceil_count(math.e * c / eps - c / xi0)
    return (runs, length)


##### Uniform Coordinate Descent for Composite Functions #####


def gamma_mu(mu) -> float:
    """Contraction factor for a strongly convex composite function."""
    _check_positive('Strong convexity parameter', mu)
    if mu <= 2:
        return 1 - mu / 4
    return 1 / mu


def k_ucdc_convex_real(n, R_sq, xi0, eps, rho):
    """
    Return (K_a, K_b), the two bounds for a convex composite function,
    with None for a bound whose precondition on `eps` fails.  Raise
    `ValueError` if neither applies.
    """
    _check_eps_rho(eps, rho)
    _check_positive('Number of blocks', n)
    _check_positive('Initial residual', xi0)
    if not R_sq >= 0:
        raise ValueError('Squared radius must be nonnegative: {!r}'
                         .format(R_sq))
    k_a = None
    k_b = None
    if eps < xi0:
        c = 2 * n * max(R_sq, xi0)
        k_a = (c / eps) * (1 + math.log(1 / rho)) + 2 - c / xi0
    if eps < min(R_sq, xi0):
        k_b = (2 * n * R_sq / eps) * math.log(xi0 / (eps * rho))
    if k_a is None and k_b is None:
        raise ValueError('Target accuracy {!r} is not below the initial '
                         'residual {!r}'.format(eps, xi0))
    return (k_a, k_b)


def k_ucdc_convex(n, R_sq, xi0, eps, rho):
    return tuple(None if k is None else ceil_count(k)
                 for k in k_ucdc_convex_real(n, R_sq, xi0, eps, rho))


def k_ucdc_strong_real(n, mu, xi0, eps, rho):
    _check_eps_rho(eps, rho)
    _check_positive('Number of blocks', n)
    _check_positive('Initial residual', xi0)
    return n / (1 - gamma_mu(mu)) * math.log(xi0 / (rho * eps))


def k_ucdc_strong(n, mu, xi0, eps, rho) -> int:
    return ceil_count(k_ucdc_strong_real(n, mu, xi0, eps, rho))


def ucdc_strong_factor(mu, loose=False) -> float:
    """
    Factor multiplying n log(xi0 / (rho eps)) in the strongly convex
    bound: 1 / (1 - gamma_mu), or the simpler
    max(4 / mu, mu / (mu - 1)) which is never smaller.
    """
    if not loose:
        return 1 / (1 - gamma_mu(mu))
    _check_positive('Strong convexity parameter', mu)
    if mu <= 1:
        return 4 / mu
    return max(4 / mu, mu / (mu - 1))


def regularization_weight(eps, dist_sq) -> float:
    """mu = eps / ||x_0 - x*||_L^2, the weight of the proximal term."""
    _check_positive('Target accuracy', eps)
    _check_positive('Squared distance', dist_sq)
    if eps > 2 * dist_sq:
        raise ValueError('Target accuracy must be at most twice the squared '
                         'distance: {!r} > 2 * {!r}'.format(eps, dist_sq))
    return eps / dist_sq


def k_regularized_real(n, dist_sq, xi0, eps, rho):
    _check_eps_rho(eps, rho)
    _check_positive('Number of blocks', n)
    _check_positive('Initial residual', xi0)
    regularization_weight(eps, dist_sq)
    return (4 * n * dist_sq / eps) * math.log(2 * xi0 / (rho * eps))


def k_regularized(n, dist_sq, xi0, eps, rho) -> int:
    return ceil_count(k_regularized_real(n, dist_sq, xi0, eps, rho))


##### Coordinate Descent for Smooth Functions #####


def weights_lp_inv(lipschitz, p):
    """Return the weights L / p of the norm the smooth bounds use."""
    lipschitz = numpy.asarray(lipschitz, dtype=float)
    p = numpy.asarray(p, dtype=float)
    if lipschitz.shape != p.shape:
        raise ValueError('Dimension mismatch: {} vs {}'.format(
            lipschitz.shape, p.shape))
    if not numpy.all(p > 0):
        raise ValueError('Probabilities must be positive')
    return lipschitz / p


def k_rcds_convex_real(R_sq_LPinv, xi0, eps, rho):
    """
    Return (K_a, K_b) for a convex smooth function, where K_b drops the
    term in `xi0` at the cost of an additive constant.
    """
    _check_eps_rho(eps, rho)
    _check_positive('Initial residual', xi0)
    _check_positive('Squared radius', R_sq_LPinv)
    if not eps < min(xi0, 2 * R_sq_LPinv):
        raise ValueError('Target accuracy must be below both the initial '
                         'residual and twice the squared radius: {!r}'
                         .format(eps))
    c = 2 * R_sq_LPinv
    head = (c / eps) * (1 + math.log(1 / rho))
    return (head + 2 - c / xi0, head - 2)


def k_rcds_convex(R_sq_LPinv, xi0, eps, rho):
    return tuple(ceil_count(k)
                 for k in k_rcds_convex_real(R_sq_LPinv, xi0, eps, rho))


def k_rcds_strong_real(mu, xi0, eps, rho):
    _check_eps_rho(eps, rho)
    _check_positive('Strong convexity parameter', mu)
    _check_positive('Initial residual', xi0)
    if not eps < xi0:
        raise ValueError('Target accuracy must be less than the initial '
                         'residual: {!r} >= {!r}'.format(eps, xi0))
    return (1 / mu) * math.log(xi0 / (eps * rho))


def k_rcds_strong(mu, xi0, eps, rho) -> int:
    return ceil_count(k_rcds_strong_real(mu, xi0, eps, rho))


# Earlier bounds for the smooth case, obtained by minimizing a
# regularized objective


def k_regularized_smooth_uniform_real(n, R_sq_L, xi0, eps, rho):
    """Uniform probabilities: (8 n R_L^2 / eps) log(4 xi0 / (eps rho))."""
    _check_eps_rho(eps, rho)
    _check_positive('Number of blocks', n)
    _check_positive('Initial residual', xi0)
    return (8 * n * R_sq_L / eps) * math.log(4 * xi0 / (eps * rho))


def k_regularized_smooth_uniform(n, R_sq_L, xi0, eps, rho) -> int:
    return ceil_count(
        k_regularized_smooth_uniform_real(n, R_sq_L, xi0, eps, rho))


def k_regularized_smooth_lipschitz_real(n, S, R_sq_I, xi0, eps, rho):
    """
    Probabilities L_i / S with S = sum_i L_i:
    (2n + 8 S R_I^2 / eps) log(4 xi0 / (eps rho)).
    """
    _check_eps_rho(eps, rho)
    _check_positive('Number of blocks', n)
    _check_positive('Sum of Lipschitz constants', S)
    _check_positive('Initial residual', xi0)
    return (2 * n + 8 * S * R_sq_I / eps) * math.log(4 * xi0 / (eps * rho))


def k_regularized_smooth_lipschitz(n, S, R_sq_I, xi0, eps, rho) -> int:
    return ceil_count(
        k_regularized_smooth_lipschitz_real(n, S, R_sq_I, xi0, eps, rho))


##### Comparison of Lipschitz Constants #####


def comparison_table(L_grad, lipschitz, u, eps, beta=None):
    """
    Leading terms (n / eps) sum_i K_i (u^(i))^2 of the complexity of
    coordinate descent methods that differ in the Lipschitz constants
    K_i they use, with u = x* - x_0 and one coordinate per block.

    Return a list of (method, constant, value) rows.  `L_grad` is the
    Lipschitz constant of the full gradient and `beta` a common
    coordinate constant (default max L_i).
    """
    lipschitz = numpy.asarray(lipschitz, dtype=float)
    u = numpy.asarray(u, dtype=float)
    if lipschitz.shape != u.shape:
        raise ValueError('Dimension mismatch: {} vs {}'.format(
            lipschitz.shape, u.shape))
    _check_positive('Target accuracy', eps)
    if beta is None:
        beta = float(lipschitz.max())
    n = len(u)
    u_sq = u * u
    scale = n / eps
    return [
        ('greedy, full-gradient constant', 'L(grad f)',
         scale * L_grad * float(u_sq.sum())),
        ('cyclic, full-gradient constant', 'L(grad f)',
         scale * L_grad * float(u_sq.sum())),
        ('uniform, common constant', 'max L_i',
         scale * beta * float(u_sq.sum())),
        ('uniform, block constants', 'L_i',
         scale * float(numpy.dot(lipschitz, u_sq))),
    ]


##### Bound Inputs #####


def largest_eigenvalue(matrix) -> float:
    """Largest eigenvalue of a symmetric matrix, e.g. L(grad f)."""
    matrix = numpy.asarray(matrix, dtype=float)
    top = scipy.linalg.eigvalsh(matrix, subset_by_index=[
        matrix.shape[0] - 1, matrix.shape[0] - 1])
    return float(top[0])


def strong_convexity_parameter(hessian, w) -> float:
    """
    Strong convexity parameter of a quadratic with the given Hessian
    with respect to the weighted norm with per-coordinate weights `w`:
    the smallest eigenvalue of W^(-1/2) H W^(-1/2).
    """
    hessian = numpy.asarray(hessian, dtype=float)
    w = numpy.asarray(w, dtype=float)
    if hessian.shape != (len(w), len(w)):
        raise ValueError('Dimension mismatch: Hessian {} for {} weights'
                         .format(hessian.shape, len(w)))
    if not numpy.all(w > 0):
        raise ValueError('Weights must be positive')
    scale = 1 / numpy.sqrt(w)
    scaled = hessian * numpy.outer(scale, scale)
    bottom = scipy.linalg.eigvalsh(scaled, subset_by_index=[0, 0])
    return max(float(bottom[0]), 0.0)


def level_set_radius_sq_surrogate(x0, x_star, w, part: BlockPartition,
                                  norm: BlockNorm=None) -> float:
    """
    ||x_0 - x*||_W^2, which stands in for the squared level-set radius
    when the minimizer is known and unique.
    """
    if norm is None:
        norm = BlockNorm.euclidean(part)
    diff = numpy.asarray(x0, dtype=float) - numpy.asarray(x_star, dtype=float)
    return norm_w(diff, w, norm, part) ** 2


def trace_lipschitz_constant(lipschitz, v) -> float:
    """tr(L V^-1), a Lipschitz constant of grad f in the norm ||.||_V."""
    lipschitz = numpy.asarray(lipschitz, dtype=float)
    v = numpy.asarray(v, dtype=float)
    return float(numpy.sum(lipschitz / v))


##### Simulation #####


def simulate_theorem1(c, xi0, eps, K, paths=10_000, seed=0, stream=0,
                      property='i') -> float:
    """
    Return the fraction of simulated paths with xi_K <= eps.

    The paths follow the two-point process that meets the defining
    property with equality: from xi_k the next value is 0 with
    probability xi_k / c (property 'i') or 1 / c (property 'ii') and
    otherwise stays xi_k.  A path therefore stays at xi0 for a geometric
    number of steps and the success event is that the first jump occurs
    within K steps.
    """
    if property == 'i':
        jump = xi0 / c
    elif property == 'ii':
        jump = 1 / c
    else:
        raise ValueError("Property must be 'i' or 'ii': {!r}"
                         .format(property))
    if not 0 < jump <= 1:
        raise ValueError('Jump probability must be in (0, 1]: {!r}'
                         .format(jump))
    if xi0 <= eps:
        return 1.0
    prng = new_prng(seed, stream)
    first_jump = prng.geometric(jump, size=paths)
    return float(numpy.mean(first_jump <= K))


def recursion_hitting_time(c, xi0, eps, max_steps=10**8) -> int:
    """
    Return the first k with xi_k <= eps for the deterministic recursion
    xi_(k+1) = xi_k - xi_k^2 / c, or -1 if it takes over `max_steps`.
    """
    _check_positive('Constant', c)
    if not 0 < xi0 <= c:
        raise ValueError('Initial value must be in (0, c]: {!r}'.format(xi0))
    xi = float(xi0)
    for k in range(max_steps + 1):
        if xi <= eps:
            return k
        xi -= xi * xi / c
    return -1


def simulate_restarts(c, xi0, eps, rho, paths=10_000, seed=0, stream=0
                      ) -> float:
    """
    Return the fraction of simulated restart schedules in which at
    least one of the r runs of k1 steps of the property (i) two-point
    process ends at or below `eps`.
    """
    (runs, length) = restart_schedule(c, xi0, eps, rho)
    prng = new_prng(seed, stream)
    first_jump = prng.geometric(xi0 / c, size=(paths, runs))
    return float(numpy.mean(numpy.any(first_jump <= length, axis=1)))


##### Evaluation by Name #####


class BoundInputs:
    """The inputs of the bounds, any of which may be missing (None)."""

    fields = ('n', 'eps', 'rho', 'xi0', 'R_sq', 'mu', 'c', 'dist_sq',
              'S', 'R_sq_I')

    def __init__(self, n=None, eps=None, rho=None, xi0=None, R_sq=None,
                 mu=None, c=None, dist_sq=None, S=None, R_sq_I=None):
        self.n = n
        self.eps = eps
        self.rho = rho
        self.xi0 = xi0
        self.R_sq = R_sq
        self.mu = mu
        self.c = c
        self.dist_sq = dist_sq
        self.S = S
        self.R_sq_I = R_sq_I

    def require(self, *names):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValueError('Missing inputs: {}'.format(', '.join(missing)))
        return [getattr(self, name) for name in names]

    def __repr__(self):
        return 'BoundInputs({})'.format(', '.join(
            '{}={!r}'.format(name, getattr(self, name))
            for name in self.fields if getattr(self, name) is not None))


def _seq_i(inputs):
    return k_theorem1(*inputs.require('c', 'xi0', 'eps', 'rho'), 'i')


def _seq_ii(inputs):
    return k_theorem1(*inputs.require('c', 'xi0', 'eps', 'rho'), 'ii')


def _restarts(inputs):
    (r, k1) = restart_schedule(*inputs.require('c', 'xi0', 'eps', 'rho'))
    return r * k1


def _ucdc_convex(inputs):
    return k_ucdc_convex(*inputs.require('n', 'R_sq', 'xi0', 'eps', 'rho'))


def _ucdc_strong(inputs):
    return k_ucdc_strong(*inputs.require('n', 'mu', 'xi0', 'eps', 'rho'))


def _ucdc_regularized(inputs):
    return k_regularized(*inputs.require('n', 'dist_sq', 'xi0', 'eps', 'rho'))


def _rcds_convex(inputs):
    return k_rcds_convex(*inputs.require('R_sq', 'xi0', 'eps', 'rho'))


def _rcds_strong(inputs):
    return k_rcds_strong(*inputs.require('mu', 'xi0', 'eps', 'rho'))


def _smooth_uniform_regularized(inputs):
    return k_regularized_smooth_uniform(
        *inputs.require('n', 'R_sq', 'xi0', 'eps', 'rho'))


def _smooth_lipschitz_regularized(inputs):
    return k_regularized_smooth_lipschitz(
        *inputs.require('n', 'S', 'R_sq_I', 'xi0', 'eps', 'rho'))


bounds = {
    'sequence-i': (_seq_i, 'decreasing sequence, property (i)'),
    'sequence-ii': (_seq_ii, 'decreasing sequence, property (ii)'),
    'restarts': (_restarts, 'restarted sequence, total iterations'),
    'ucdc-convex': (_ucdc_convex, 'UCDC, convex composite (K_a, K_b)'),
    'ucdc-strong': (_ucdc_strong, 'UCDC, strongly convex composite'),
    'ucdc-regularized': (_ucdc_regularized,
                         'UCDC on the regularized composite'),
    'rcds-convex': (_rcds_convex, 'RCDS, convex smooth (K_a, K_b)'),
    'rcds-strong': (_rcds_strong, 'RCDS, strongly convex smooth'),
    'smooth-uniform-regularized': (
        _smooth_uniform_regularized,
        'regularized smooth method, uniform probabilities'),
    'smooth-lipschitz-regularized': (
        _smooth_lipschitz_regularized,
        'regularized smooth method, probabilities L_i / S'),
}
"""Bound IDs and their evaluators and descriptions"""


def evaluate_bound(bound_id: str, inputs: BoundInputs):
    """
    Evaluate the named bound.  Raise `KeyError` for an unknown ID and
    `ValueError` for missing inputs or violated preconditions.
    """
    if bound_id not in bounds:
        raise KeyError('Unknown bound: {!r}.  Expected one of: {}'.format(
            bound_id, ', '.join(bounds)))
    (evaluator, _) = bounds[bound_id]
    return evaluator(inputs)


def summary_table(inputs: BoundInputs):
    """
    Evaluate every bound the inputs allow.  Return a list of (bound ID,
    description, value, error) rows where exactly one of value and error
    is None.
    """
    rows = []
    for (bound_id, (evaluator, description)) in bounds.items():
        try:
            rows.append((bound_id, description, evaluator(inputs), None))
        except ValueError as e:
            logger.debug('Bound {} not applicable: {}', bound_id, e)
            rows.append((bound_id, description, None, str(e)))
    return rows
