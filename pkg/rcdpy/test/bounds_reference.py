"""
Straightforward evaluations of the iteration bounds, written out term
by term, to check `bounds.py` against.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from math import log


def sequence_i(c, xi0, eps, rho):
    return c / eps + (c / eps) * log(1 / rho) + 2 - c / xi0


def sequence_ii(c, xi0, eps, rho):
    return c * (log(xi0) - log(eps) - log(rho))


def ucdc_convex(n, R_sq, xi0, eps, rho):
    c = 2 * n * (R_sq if R_sq > xi0 else xi0)
    k_a = c * (1 + log(1 / rho)) / eps + 2 - c / xi0
    k_b = None
    if eps < R_sq:
        k_b = 2 * n * R_sq * (log(xi0) - log(eps) - log(rho)) / eps
    return (k_a, k_b)


def ucdc_strong(n, mu, xi0, eps, rho):
    if mu <= 2:
        factor = 4 / mu
    else:
        factor = mu / (mu - 1)
    return n * factor * (log(xi0) - log(rho) - log(eps))


def ucdc_regularized(n, dist_sq, xi0, eps, rho):
    return 4 * n * dist_sq * (log(2) + log(xi0) - log(rho) - log(eps)) / eps


def rcds_convex(R_sq, xi0, eps, rho):
    head = 2 * R_sq * (1 + log(1 / rho)) / eps
    return (head + 2 - 2 * R_sq / xi0, head - 2)


def rcds_strong(mu, xi0, eps, rho):
    return (log(xi0) - log(eps) - log(rho)) / mu


def smooth_uniform(n, R_sq, xi0, eps, rho):
    return 8 * n * R_sq * (log(4) + log(xi0) - log(eps) - log(rho)) / eps


def smooth_lipschitz(n, S, R_sq_I, xi0, eps, rho):
    return ((2 * n + 8 * S * R_sq_I / eps)
            * (log(4) + log(xi0) - log(eps) - log(rho)))
