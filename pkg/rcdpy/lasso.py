"""
Sparse least squares with an L1 penalty,

    F(x) = 1/2 ||Ax - b||^2 + lam ||x||_1,

as a composite problem on single coordinates.  The oracle keeps the
residual g = Ax - b so that a coordinate gradient a_i'g and a step
x_i <- x_i + t both cost O(nnz(a_i)).  The generator builds instances
with a known minimizer x* by choosing the residual at x* first and
scaling the columns of A until 0 is in the subdifferential of F at x*.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from __future__ import annotations

import numpy
import scipy.sparse

from . import files
from . import logging
from . import parse
from .blocks import BlockPartition
from .framework import (  # noqa: F401 (re-exported)
    CompositeProblem,
    L1Regularizer,
    ProblemError,
    SmoothOracle,
    ZeroRegularizer,
    soft_threshold,
    support_counts,
)
from .numpy_utils import as_vector, new_prng


logger = logging.getLogger(__name__, '{')


# Smallest |a_i'r| a support column may have before it is redrawn
_MIN_CORRELATION = 1e-6
_MAX_REDRAWS = 100


##### Instances #####


class LassoInstance:
    """
    Data of a Lasso problem: an m x n sparse matrix `A` in
    compressed-column layout, the vector `b`, the L1 weight `lam`, and
    optionally a certificate, the minimizer `x_star` and the optimal
    value `f_star`.

    Instances are immutable after construction.
    """

    def __init__(self, A, b, lam, x_star=None, f_star=None):
        A = scipy.sparse.csc_matrix(A, dtype=float, copy=True)
        A.sum_duplicates()
        A.sort_indices()
        (m, n) = A.shape
        if not lam >= 0:
            raise ValueError('L1 weight must be nonnegative: {!r}'
                             .format(lam))
        if (x_star is None) != (f_star is None):
            raise ValueError('A certificate needs both x* and F*')
        self.A = A
        self.b = as_vector(b, m, 'b')
        self.lam = float(lam)
        self.x_star = None if x_star is None else as_vector(x_star, n,
                                                            'x_star')
        self.f_star = None if f_star is None else float(f_star)
        lipschitz = numpy.asarray(A.multiply(A).sum(axis=0)).reshape(-1)
        lipschitz.flags.writeable = False
        self.lipschitz = lipschitz
        for array in (self.b, self.A.data, self.A.indices, self.A.indptr):
            array.flags.writeable = False
        if self.x_star is not None:
            self.x_star.flags.writeable = False

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def nnz_a(self):
        return self.A.nnz

    @property
    def nnz_x_star(self):
        if self.x_star is None:
            return None
        return int(numpy.count_nonzero(self.x_star))

    @property
    def has_certificate(self):
        return self.x_star is not None

    def objective(self, x) -> float:
        """F(x) from scratch."""
        x = as_vector(x, self.n, 'x')
        residual = self.A @ x - self.b
        return (0.5 * float(numpy.dot(residual, residual))
                + self.lam * float(numpy.sum(numpy.abs(x))))

    def __eq__(self, other):
        if not isinstance(other, LassoInstance):
            return NotImplemented
        if self.A.shape != other.A.shape or self.lam != other.lam:
            return False
        same_A = (numpy.array_equal(self.A.indptr, other.A.indptr)
                  and numpy.array_equal(self.A.indices, other.A.indices)
                  and numpy.array_equal(self.A.data, other.A.data))
        if not same_A or not numpy.array_equal(self.b, other.b):
            return False
        if self.has_certificate != other.has_certificate:
            return False
        return (not self.has_certificate
                or (numpy.array_equal(self.x_star, other.x_star)
                    and self.f_star == other.f_star))

    def __repr__(self):
        return ('LassoInstance(m={}, n={}, nnz_a={}, lam={!r}, '
                'nnz_x_star={})').format(self.m, self.n, self.nnz_a,
                                         self.lam, self.nnz_x_star)


##### Oracle #####


def lasso_block_gradient(state, i, column) -> float:
    """
    Return a_i'g for the residual g = Ax - b in `state.cache`, where
    `column` is the (row indices, values) pair of a_i.
    """
    (rows, values) = column
    if len(rows) == 0:
        return 0.0
    return float(numpy.dot(values, state.cache[rows]))


def lasso_apply_step(state, i, t, column) -> float:
    """
    Apply x_i <- x_i + t and g <- g + t a_i, touching only the rows of
    a_i, update the support, and return the change in 1/2 ||g||^2.
    """
    if t == 0:
        return 0.0
    (rows, values) = column
    state.x[i] += t
    state.support.update(i, state.x[i] != 0)
    if len(rows) == 0:
        return 0.0
    g = state.cache
    old = g[rows]
    new = old + t * values
    g[rows] = new
    return 0.5 * (float(numpy.dot(new, new)) - float(numpy.dot(old, old)))


class LassoOracle(SmoothOracle):
    """
    f(x) = 1/2 ||Ax - b||^2 with L_i = ||a_i||^2 and the residual
    Ax - b as the cache.
    """

    def __init__(self, A, b):
        A = scipy.sparse.csc_matrix(A, dtype=float)
        A.sort_indices()
        super().__init__(BlockPartition.coordinate(A.shape[1]))
        self.A = A
        self.b = as_vector(b, A.shape[0], 'b')
        self._lipschitz = numpy.asarray(
            A.multiply(A).sum(axis=0)).reshape(-1)
        self._lipschitz.flags.writeable = False
        # Column views for O(nnz(a_i)) access in solver loops
        indptr = A.indptr.tolist()
        self._columns = [
            (A.indices[indptr[i]:indptr[i + 1]],
             A.data[indptr[i]:indptr[i + 1]])
            for i in range(A.shape[1])]
        self._column_nnz = numpy.diff(A.indptr).tolist()

    @property
    def lipschitz_constants(self):
        return self._lipschitz

    def column(self, i):
        return self._columns[i]

    def new_cache(self, x):
        return self.A @ x - self.b

    def value(self, state):
        return 0.5 * float(numpy.dot(state.cache, state.cache))

    def value_at(self, x):
        residual = self.A @ x - self.b
        return 0.5 * float(numpy.dot(residual, residual))

    def block_gradient(self, state, i):
        self.touches += self._column_nnz[i]
        return lasso_block_gradient(state, i, self._columns[i])

    def apply_step(self, state, i, t):
        self.touches += self._column_nnz[i]
        return lasso_apply_step(state, i, float(t), self._columns[i])

    def gradient(self, state):
        return self.A.T @ state.cache

    def block_hessian(self, i):
        return numpy.array([[self._lipschitz[i]]])


def make_problem(instance: LassoInstance) -> CompositeProblem:
    """Return the composite problem of an instance, with its certificate."""
    oracle = LassoOracle(instance.A, instance.b)
    regularizer = (L1Regularizer(instance.lam) if instance.lam > 0
                   else ZeroRegularizer())
    return CompositeProblem(oracle, regularizer, instance.f_star,
                            instance.x_star)


##### Certificates #####


class CertificateReport:
    """
    Result of checking a certificate: the largest distance of a
    coordinate gradient from -lam times the subdifferential of |x*_i|,
    the relative gap between the recorded and recomputed F*, and the
    tolerances they were checked against.
    """

    def __init__(self, max_violation, worst_coordinate, objective_gap,
                 tol, objective_tol):
        self.max_violation = max_violation
        self.worst_coordinate = worst_coordinate
        self.objective_gap = objective_gap
        self.tol = tol
        self.objective_tol = objective_tol

    @property
    def optimal(self):
        return self.max_violation <= self.tol

    @property
    def consistent(self):
        return self.objective_gap <= self.objective_tol

    @property
    def passed(self):
        return self.optimal and self.consistent

    def __repr__(self):
        return ('CertificateReport(passed={}, max_violation={!r}, '
                'objective_gap={!r})').format(
                    self.passed, self.max_violation, self.objective_gap)


def subgradient_violations(instance: LassoInstance, x) -> numpy.ndarray:
    """
    Return dist(a_i'(Ax - b), -lam d|x_i|) for every coordinate, which
    is zero everywhere exactly when x is a minimizer.
    """
    x = as_vector(x, instance.n, 'x')
    grad = instance.A.T @ (instance.A @ x - instance.b)
    lam = instance.lam
    return numpy.where(
        x != 0,
        numpy.abs(grad + lam * numpy.sign(x)),
        numpy.maximum(numpy.abs(grad) - lam, 0.0))


def verify_certificate(instance: LassoInstance, tol=None,
                       objective_tol=1e-12) -> CertificateReport:
    """
    Check that the certificate's x* satisfies 0 in dF(x*) to within
    `tol` (default 1e-9 max(lam, 1)) and that F* = F(x*) to within
    `objective_tol` relative.
    """
    if not instance.has_certificate:
        raise ProblemError('Instance has no certificate')
    if tol is None:
        tol = 1e-9 * max(instance.lam, 1.0)
    violations = subgradient_violations(instance, instance.x_star)
    worst = int(numpy.argmax(violations)) if len(violations) else -1
    max_violation = float(violations[worst]) if worst >= 0 else 0.0
    recomputed = instance.objective(instance.x_star)
    gap = (abs(recomputed - instance.f_star)
           / max(1.0, abs(instance.f_star)))
    return CertificateReport(max_violation, worst, gap, tol, objective_tol)


##### Generator #####


def sample_lipschitz_profile(profile, n, prng) -> numpy.ndarray:
    """
    Return n target column norms ||a_i||^2 drawn from a profile:
    'uniform' for uniform on (0, 1], a mixture text such as
    '0.98:1e-6,0.02:1e3' (fraction:value pairs), or explicit values.
    """
    if isinstance(profile, str):
        if profile.strip().lower() == 'uniform':
            return 1.0 - prng.random(n)
        (pairs, err) = parse.mixture_err(profile)
        if err is not None:
            raise ValueError('Bad Lipschitz profile: {}'.format(err))
        weights = numpy.array([w for (w, _) in pairs])
        values = numpy.array([v for (_, v) in pairs])
        if numpy.any(values <= 0):
            raise ValueError('Profile values must be positive: {!r}'
                             .format(profile))
        return prng.choice(values, size=n, p=weights / weights.sum())
    targets = as_vector(profile, n, 'lipschitz_profile')
    if numpy.any(targets <= 0):
        raise ValueError('Profile values must be positive')
    return targets


def _nonzero_uniform(prng, size):
    values = prng.uniform(-1.0, 1.0, size)
    values[values == 0] = 1.0
    return values


def sparse_positions(m, n, nnz_a, prng):
    """
    Return the linear (column-major) positions of `nnz_a` distinct
    entries of an m x n matrix with at least one entry per column.
    """
    first = numpy.arange(n) * m + prng.integers(0, m, n)
    extras = nnz_a - n
    if extras == 0:
        return first
    total = m * n
    if total <= 4 * nnz_a:
        pool = numpy.setdiff1d(numpy.arange(total), first,
                               assume_unique=True)
        extra = prng.choice(pool, extras, replace=False)
    else:
        extra = numpy.empty(0, dtype=numpy.int64)
        while len(extra) < extras:
            draws = prng.integers(0, total, int(1.25 * (extras - len(extra)))
                                  + 16)
            extra = numpy.setdiff1d(numpy.union1d(extra, draws), first,
                                    assume_unique=True)
        if len(extra) > extras:
            extra = prng.choice(extra, extras, replace=False)
    return numpy.concatenate((first, extra))


def generate_instance(m, n, nnz_a, nnz_x, lam, seed, stream=0,
                      lipschitz_profile=None,
                      residual_scale=1.0) -> LassoInstance:
    """
    Generate a Lasso instance with a certified minimizer.

    `A` gets `nnz_a` entries uniform in [-1, 1] with at least one per
    column, x* gets `nnz_x` nonzeros uniform in [-1, 1], and the
    residual r = Ax* - b at the minimizer is uniform in
    [-residual_scale, residual_scale] (zero when lam = 0, so that
    F* = 0).  Columns are then scaled so that a_i'r = -lam sign(x*_i)
    on the support of x* and |a_i'r| <= lam elsewhere, which makes x*
    optimal, and b is set to Ax* - r.

    With lam = 0, `lipschitz_profile` rescales the columns to
    prescribed norms ||a_i||^2; see `sample_lipschitz_profile`.

    The result depends only on the arguments and is the same on every
    platform NumPy's Philox generator is.
    """
    if m < 1 or n < 1:
        raise ValueError('Dimensions must be positive: m={}, n={}'
                         .format(m, n))
    if not n <= nnz_a <= m * n:
        raise ValueError('Need n <= nnz(A) <= m n: nnz(A)={}, m={}, n={}'
                         .format(nnz_a, m, n))
    if not 0 <= nnz_x <= n:
        raise ValueError('Need 0 <= nnz(x*) <= n: nnz(x*)={}, n={}'
                         .format(nnz_x, n))
    if not lam >= 0:
        raise ValueError('L1 weight must be nonnegative: {!r}'.format(lam))
    if lipschitz_profile is not None and lam > 0:
        raise ValueError('Lipschitz profiles keep x* optimal only for '
                         'lam = 0')
    if not residual_scale > 0:
        raise ValueError('Residual scale must be positive: {!r}'
                         .format(residual_scale))
    prng = new_prng(seed, stream)

    positions = sparse_positions(m, n, nnz_a, prng)
    (cols, rows) = numpy.divmod(positions, m)
    values = _nonzero_uniform(prng, len(positions))
    A = scipy.sparse.csc_matrix((values, (rows, cols)), shape=(m, n))
    A.sort_indices()

    support = numpy.sort(prng.choice(n, nnz_x, replace=False))
    x_star = numpy.zeros(n)
    x_star[support] = _nonzero_uniform(prng, nnz_x)

    if lam > 0:
        r = residual_scale * prng.uniform(-1.0, 1.0, m)
        scale = _certificate_scaling(A, r, x_star, support, lam, prng)
    else:
        r = numpy.zeros(m)
        scale = numpy.ones(n)
        if lipschitz_profile is not None:
            targets = sample_lipschitz_profile(lipschitz_profile, n, prng)
            norms = numpy.asarray(A.multiply(A).sum(axis=0)).reshape(-1)
            scale = numpy.sqrt(targets / norms)
    A.data *= numpy.repeat(scale, numpy.diff(A.indptr))

    b = A @ x_star - r
    residual = A @ x_star - b
    f_star = (0.5 * float(numpy.dot(residual, residual))
              + lam * float(numpy.sum(numpy.abs(x_star))))
    instance = LassoInstance(A, b, lam, x_star, f_star)
    logger.info('Generated {!r}: F* = {!r}', instance, f_star)
    return instance


def _certificate_scaling(A, r, x_star, support, lam, prng):
    """
    Return column scale factors making x* optimal for residual r,
    redrawing the values of support columns nearly orthogonal to r.
    """
    indptr = A.indptr
    z = A.T @ r
    for i in support.tolist():
        redraws = 0
        while abs(z[i]) < _MIN_CORRELATION:
            if redraws == _MAX_REDRAWS:
                raise ProblemError(
                    'Column {} stays orthogonal to the residual after {} '
                    'redraws'.format(i, redraws))
            sl = slice(indptr[i], indptr[i + 1])
            A.data[sl] = _nonzero_uniform(prng, sl.stop - sl.start)
            z[i] = float(numpy.dot(A.data[sl], r[A.indices[sl]]))
            redraws += 1
    scale = numpy.ones(A.shape[1])
    scale[support] = -lam * numpy.sign(x_star[support]) / z[support]
    off_support = numpy.ones(A.shape[1], dtype=bool)
    off_support[support] = False
    too_big = numpy.flatnonzero(off_support & (numpy.abs(z) > lam))
    u = 1.0 - prng.random(len(too_big))
    scale[too_big] = lam * u / numpy.abs(z[too_big])
    return scale


##### Instance Files #####


_TEXT_FORMAT_NAME = 'rcdpy-lasso'


def write_instance(instance: LassoInstance, path, format=None) -> None:
    """
    Write an instance losslessly as text or as compressed NumPy arrays
    (`format` 'text' or 'npz', by default chosen by the path's suffix).

    The text format is `key value` header lines (format, m, n, nnz,
    lambda, certificate, f_star), then an `A` line followed by one
    `row column value` line per entry in column order, a `b` line
    followed by m values, and, with a certificate, an `x_star` line
    followed by `index value` lines for the nonzeros of x*.
    """
    if format is None:
        format = 'npz' if files.data_suffix(path) == 'npz' else 'text'
    if format == 'npz':
        _write_npz(instance, path)
    elif format == 'text':
        _write_text(instance, path)
    else:
        raise ValueError('Unknown instance format: {!r}'.format(format))
    logger.info('Wrote {!r} to {}', instance, files.source_name(path))


def _write_npz(instance, path):
    arrays = dict(
        shape=numpy.array(instance.A.shape, dtype=numpy.int64),
        indptr=instance.A.indptr,
        indices=instance.A.indices,
        data=instance.A.data,
        b=instance.b,
        lam=numpy.array(instance.lam),
    )
    if instance.has_certificate:
        x_idx = numpy.flatnonzero(instance.x_star)
        arrays.update(x_star_indices=x_idx,
                      x_star_values=instance.x_star[x_idx],
                      f_star=numpy.array(instance.f_star))
    with files.open_file(path, 'wb') as file:
        numpy.savez_compressed(file, **arrays)


def _write_text(instance, path):
    fmt = files.format_float
    A = instance.A
    with files.open_file(path, 'wt') as out:
        out.write('format {}\n'.format(_TEXT_FORMAT_NAME))
        out.write('m {}\nn {}\nnnz {}\n'.format(instance.m, instance.n,
                                               instance.nnz_a))
        out.write('lambda {}\n'.format(fmt(instance.lam)))
        out.write('certificate {}\n'.format(int(instance.has_certificate)))
        if instance.has_certificate:
            out.write('f_star {}\n'.format(fmt(instance.f_star)))
        out.write('A\n')
        indptr = A.indptr.tolist()
        rows = A.indices.tolist()
        for col in range(instance.n):
            for pos in range(indptr[col], indptr[col + 1]):
                out.write('{} {} {}\n'.format(rows[pos], col,
                                              fmt(A.data[pos])))
        out.write('b\n')
        for value in instance.b.tolist():
            out.write(fmt(value))
            out.write('\n')
        if instance.has_certificate:
            out.write('x_star\n')
            for idx in numpy.flatnonzero(instance.x_star).tolist():
                out.write('{} {}\n'.format(idx, fmt(instance.x_star[idx])))


def read_instance(path) -> LassoInstance:
    """Read an instance written by `write_instance`."""
    if files.data_suffix(path) == 'npz':
        instance = _read_npz(path)
    else:
        instance = _read_text(path)
    logger.info('Read {!r} from {}', instance, files.source_name(path))
    return instance


def _read_npz(path):
    with files.open_file(path, 'rb') as file:
        with numpy.load(file) as arrays:
            shape = tuple(int(d) for d in arrays['shape'])
            A = scipy.sparse.csc_matrix(
                (arrays['data'], arrays['indices'], arrays['indptr']),
                shape=shape)
            x_star = f_star = None
            if 'f_star' in arrays:
                x_star = numpy.zeros(shape[1])
                x_star[arrays['x_star_indices']] = arrays['x_star_values']
                f_star = float(arrays['f_star'])
            return LassoInstance(A, arrays['b'], float(arrays['lam']),
                                 x_star, f_star)


class _TextReader:
    """Numbered non-blank lines of a text instance file."""

    def __init__(self, lines, source):
        self._lines = (
            (num, line.strip()) for (num, line) in enumerate(lines, 1)
            if line.strip() and not line.lstrip().startswith('#'))
        self.source = source
        self.line = 0

    def next(self, what):
        for (self.line, text) in self._lines:
            return text
        raise parse.ParseError('Unexpected end of file, expected',
                               what, self.source, self.line)

    def remaining(self):
        for (self.line, text) in self._lines:
            yield text

    def error(self, message, text):
        return parse.ParseError(message, text, self.source, self.line)

    def fields(self, what, count):
        text = self.next(what)
        fields = text.split()
        if len(fields) != count:
            raise self.error('Expected {}'.format(what), text)
        return fields

    def number(self, text, parser):
        (value, err) = parser(text)
        if err is not None:
            raise err.at(self.source, self.line)
        return value


def _read_text(path):
    source = files.source_name(path)
    with files.open_file(path, 'rt') as lines:
        reader = _TextReader(lines, source)
        header = {}
        for key in ('format', 'm', 'n', 'nnz', 'lambda', 'certificate'):
            (name, value) = reader.fields('`{} <value>`'.format(key), 2)
            if name != key:
                raise reader.error('Expected header `{}`'.format(key), name)
            header[key] = value
        if header['format'] != _TEXT_FORMAT_NAME:
            raise reader.error('Not a Lasso instance file',
                               header['format'])
        (m, n, nnz) = (reader.number(header[key], parse.int_err)
                       for key in ('m', 'n', 'nnz'))
        lam = reader.number(header['lambda'], parse.float_err)
        has_certificate = header['certificate'] == '1'
        f_star = None
        if has_certificate:
            (name, value) = reader.fields('`f_star <value>`', 2)
            if name != 'f_star':
                raise reader.error('Expected header `f_star`', name)
            f_star = reader.number(value, parse.float_err)
        if reader.next('`A`') != 'A':
            raise reader.error('Expected section', 'A')
        rows = numpy.empty(nnz, dtype=numpy.int64)
        cols = numpy.empty(nnz, dtype=numpy.int64)
        data = numpy.empty(nnz)
        for pos in range(nnz):
            (row, col, value) = reader.fields('`row column value`', 3)
            rows[pos] = reader.number(row, parse.int_err)
            cols[pos] = reader.number(col, parse.int_err)
            data[pos] = reader.number(value, parse.float_err)
            if not (0 <= rows[pos] < m and 0 <= cols[pos] < n):
                raise reader.error('Entry out of bounds',
                                   '{} {}'.format(row, col))
        if reader.next('`b`') != 'b':
            raise reader.error('Expected section', 'b')
        b = numpy.array([reader.number(reader.next('a value of b'),
                                       parse.float_err)
                         for _ in range(m)])
        x_star = None
        if has_certificate:
            if reader.next('`x_star`') != 'x_star':
                raise reader.error('Expected section', 'x_star')
            x_star = numpy.zeros(n)
            for text in reader.remaining():
                (pair, err) = parse.index_value_err(
                    text, parse.space_pattern)
                if err is not None:
                    raise err.at(source, reader.line)
                (idx, value) = pair
                if not 0 <= idx < n:
                    raise reader.error('Index out of bounds', text)
                x_star[idx] = value
    A = scipy.sparse.csc_matrix((data, (rows, cols)), shape=(m, n))
    return LassoInstance(A, b, lam, x_star, f_star)
