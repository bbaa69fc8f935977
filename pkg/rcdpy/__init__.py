"""
Randomized block coordinate descent for composite convex minimization

Solvers, probability laws, and iteration-complexity calculators for
minimizing F(x) = f(x) + Psi(x) where f is smooth with block-wise
Lipschitz gradient and Psi is block separable.  Includes problem
adapters for L1-regularized least squares (Lasso) and L1-regularized
linear classification (L2-SVM and logistic losses), a generator of Lasso
instances with certified optima, and a command-line front end for
generating, solving, benchmarking, and computing bounds.

Copyright (c) 2024 The rcdpy authors.

This is free, open software released under the MIT license.  See
`LICENSE` for details.
"""
# Note that the above gets used as the basis for the short and long
# descriptions in `setup.py`.  Include the (package-wise) copyright and
# license so that it appears in the package documentation.


# Version
__version__ = '0.1.0'
