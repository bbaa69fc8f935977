"""
L1-regularized linear classification,

    F(w) = gamma sum_j L(w; x_j, y_j) + scale ||w||_1,

with the squared hinge loss (L2-SVM) or the logistic loss, as a
composite problem on single features.

The oracle keeps the margins r_j = -y_j w'x_j so that a feature's
gradient and a step on it cost O(o_i), where o_i is the number of
examples in which feature i is nonzero.  Training data is stored twice:
feature-major for coordinate updates and example-major for loading and
accuracy evaluation.  There is no bias term and no feature scaling.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from __future__ import annotations

import collections

import numpy
import scipy.sparse
import scipy.special

from . import files
from . import lasso
from . import logging
from . import parse
from . import solvers
from .blocks import BlockPartition
from .framework import (
    CompositeProblem,
    L1Regularizer,
    ProblemError,
    SmoothOracle,
    ZeroRegularizer,
)
from .numpy_utils import as_vector, new_prng
from .sampling import ProbabilityLaw, Uniform


logger = logging.getLogger(__name__, '{')


LOSSES = ('l2svm', 'logistic')


##### Datasets #####


class SvmDataset:
    """
    Labeled examples: an m x n_features sparse matrix, held both
    example-major (`by_example`, CSR) and feature-major (`by_feature`,
    CSC), and labels in {-1, +1}.

    Datasets are immutable after construction.
    """

    def __init__(self, features, labels, n_features=None):
        by_example = scipy.sparse.csr_matrix(features, dtype=float,
                                             copy=True)
        by_example.sum_duplicates()
        by_example.eliminate_zeros()
        by_example.sort_indices()
        (m, width) = by_example.shape
        if n_features is not None and n_features != width:
            if n_features < width:
                raise ValueError('Data has {} features, more than {}'
                                 .format(width, n_features))
            by_example.resize((m, n_features))
        labels = as_vector(labels, m, 'labels')
        if not numpy.all(numpy.abs(labels) == 1):
            raise ValueError('Labels must be -1 or +1')
        by_feature = by_example.tocsc()
        by_feature.sort_indices()
        if (by_feature != by_example).nnz != 0:
            raise ProblemError('Feature-major and example-major views '
                               'disagree')
        self.by_example = by_example
        self.by_feature = by_feature
        self.labels = labels
        self.observation_counts = numpy.diff(by_feature.indptr)
        for array in (labels, self.observation_counts):
            array.flags.writeable = False

    @property
    def m(self):
        return self.by_example.shape[0]

    @property
    def n_features(self):
        return self.by_example.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SvmDataset):
            return NotImplemented
        a = self.by_example
        b = other.by_example
        return (a.shape == b.shape
                and numpy.array_equal(a.indptr, b.indptr)
                and numpy.array_equal(a.indices, b.indices)
                and numpy.array_equal(a.data, b.data)
                and numpy.array_equal(self.labels, other.labels))

    def __repr__(self):
        return 'SvmDataset(m={}, n_features={}, nnz={})'.format(
            self.m, self.n_features, self.by_example.nnz)


def _normalize_labels(labels, source):
    distinct = set(labels)
    if distinct <= {-1.0, 1.0}:
        return labels
    if distinct <= {0.0, 1.0}:
        return [1.0 if label == 1 else -1.0 for label in labels]
    raise parse.ParseError('Labels must be in {-1, +1} or {0, 1}, found',
                           ' '.join(sorted(str(lbl) for lbl in distinct)),
                           source)


def load_libsvm(path, n_features=None) -> SvmDataset:
    """
    Read LIBSVM text data, one `label index:value ...` line per example
    with 1-based feature indices.

    Labels in {0, 1} are mapped to {-1, +1}.  Blank lines and `#`
    comments are skipped.  Raises `ParseError` with the line number of
    a malformed line or of a line with a repeated feature index.
    """
    source = files.source_name(path)
    labels = []
    indptr = [0]
    indices = []
    values = []
    with files.open_file(path, 'rt') as lines:
        for (line_num, line) in enumerate(lines, start=1):
            text = line.split('#', 1)[0]
            if not text.strip():
                continue
            (example, err) = parse.libsvm_line_err(text)
            if err is not None:
                raise err.at(source, line_num)
            (label, idxs, vals) = example
            labels.append(label)
            indices.extend(idx - 1 for idx in idxs)
            values.extend(vals)
            indptr.append(len(indices))
    width = max(indices, default=-1) + 1
    if n_features is not None:
        if width > n_features:
            raise parse.ParseError(
                'Feature index exceeds the number of features', str(width),
                source)
        width = n_features
    features = scipy.sparse.csr_matrix(
        (numpy.array(values, dtype=float),
         numpy.array(indices, dtype=numpy.int64),
         numpy.array(indptr, dtype=numpy.int64)),
        shape=(len(labels), width))
    dataset = SvmDataset(features, _normalize_labels(labels, source))
    logger.info('Loaded {!r} from {}', dataset, source)
    return dataset


def write_libsvm(dataset: SvmDataset, path) -> None:
    """Write a dataset in LIBSVM format, losslessly."""
    X = dataset.by_example
    indptr = X.indptr.tolist()
    indices = X.indices.tolist()
    with files.open_file(path, 'wt') as out:
        for (j, label) in enumerate(dataset.labels.tolist()):
            out.write('+1' if label > 0 else '-1')
            for pos in range(indptr[j], indptr[j + 1]):
                out.write(' {}:{}'.format(indices[pos] + 1,
                                          files.format_float(X.data[pos])))
            out.write('\n')


def generate_separable(m, n_features, density, seed, stream=0):
    """
    Generate a linearly separable dataset and the weights that separate
    it.  Return (dataset, w).

    Every example has at least one feature, and about `density`
    n_features of them, with values uniform in [-1, 1]; the separating
    weights are standard normal and the labels are the signs of the
    scores.
    """
    if m < 1 or n_features < 1:
        raise ValueError('Dimensions must be positive: m={}, n={}'
                         .format(m, n_features))
    if not 0 < density <= 1:
        raise ValueError('Density must be in (0, 1]: {!r}'.format(density))
    prng = new_prng(seed, stream)
    nnz = max(m, int(round(density * m * n_features)))
    positions = lasso.sparse_positions(n_features, m, nnz, prng)
    (rows, cols) = numpy.divmod(positions, n_features)
    values = prng.uniform(-1.0, 1.0, len(positions))
    values[values == 0] = 1.0
    features = scipy.sparse.csr_matrix((values, (rows, cols)),
                                       shape=(m, n_features))
    w = prng.standard_normal(n_features)
    scores = features @ w
    if numpy.any(scores == 0):
        raise ProblemError('Generated an example on the separating '
                           'hyperplane')
    return (SvmDataset(features, numpy.sign(scores)), w)


##### Oracle #####


class SvmOracle(SmoothOracle):
    """
    f(w) = gamma sum_j L(r_j) for margins r_j = -y_j w'x_j and

    * L2-SVM: L(r) = max(0, 1 + r)^2, with L_i = 2 gamma sum_j x_ji^2
    * logistic: L(r) = log(1 + e^r), with L_i = gamma / 4 sum_j x_ji^2

    The cache is the vector of margins.
    """

    def __init__(self, dataset: SvmDataset, loss='l2svm', gamma=1.0):
        if loss not in LOSSES:
            raise ValueError('Unknown loss: {!r} (expected one of: {})'
                             .format(loss, ', '.join(LOSSES)))
        if not gamma > 0:
            raise ValueError('Loss weight must be positive: {!r}'
                             .format(gamma))
        super().__init__(BlockPartition.coordinate(dataset.n_features))
        self.dataset = dataset
        self.loss = loss
        self.gamma = float(gamma)
        X = dataset.by_feature
        labels = dataset.labels
        # y_j x_ji per stored entry, feature-major
        signed = X.data * labels[X.indices]
        indptr = X.indptr.tolist()
        self._columns = [
            (X.indices[indptr[i]:indptr[i + 1]],
             signed[indptr[i]:indptr[i + 1]])
            for i in range(dataset.n_features)]
        self._counts = dataset.observation_counts.tolist()
        feature_of_entry = numpy.repeat(numpy.arange(dataset.n_features),
                                        dataset.observation_counts)
        squares = numpy.bincount(feature_of_entry, weights=signed * signed,
                                 minlength=dataset.n_features)
        factor = 2.0 if loss == 'l2svm' else 0.25
        self._lipschitz = factor * self.gamma * squares
        self._lipschitz.flags.writeable = False

    @property
    def lipschitz_constants(self):
        return self._lipschitz

    def margins(self, w):
        """Return r = -y * (Xw)."""
        return -self.dataset.labels * (self.dataset.by_example @ w)

    def losses(self, r):
        """Return the per-example losses L(r_j)."""
        if self.loss == 'l2svm':
            hinge = numpy.maximum(0.0, 1.0 + r)
            return hinge * hinge
        return numpy.logaddexp(0.0, r)

    def loss_derivatives(self, r):
        """Return L'(r_j)."""
        if self.loss == 'l2svm':
            return 2.0 * numpy.maximum(0.0, 1.0 + r)
        return scipy.special.expit(r)

    def new_cache(self, x):
        return self.margins(x)

    def value(self, state):
        return self.gamma * float(numpy.sum(self.losses(state.cache)))

    def value_at(self, x):
        return self.gamma * float(numpy.sum(self.losses(self.margins(x))))

    def block_gradient(self, state, i):
        self.touches += self._counts[i]
        (rows, signed) = self._columns[i]
        if len(rows) == 0:
            return 0.0
        r = state.cache[rows]
        return -self.gamma * float(numpy.dot(signed,
                                             self.loss_derivatives(r)))

    def apply_step(self, state, i, t):
        t = float(t)
        if t == 0:
            return 0.0
        self.touches += self._counts[i]
        state.x[i] += t
        state.support.update(i, state.x[i] != 0)
        (rows, signed) = self._columns[i]
        if len(rows) == 0:
            return 0.0
        old = state.cache[rows]
        new = old - t * signed
        state.cache[rows] = new
        return self.gamma * float(numpy.sum(self.losses(new)
                                            - self.losses(old)))

    def gradient(self, state):
        X = self.dataset.by_feature
        weights = self.dataset.labels * self.loss_derivatives(state.cache)
        return -self.gamma * (X.T @ weights)


def make_problem(dataset: SvmDataset, loss='l2svm', gamma=1.0,
                 scale=1.0) -> CompositeProblem:
    """
    Return F(w) = gamma sum_j L(w; x_j, y_j) + scale ||w||_1 (no L1
    term if `scale` is zero).
    """
    oracle = SvmOracle(dataset, loss, gamma)
    regularizer = L1Regularizer(scale) if scale > 0 else ZeroRegularizer()
    return CompositeProblem(oracle, regularizer)


def svm_block_gradient(problem: CompositeProblem, state, i) -> float:
    """grad_i f(w) from the cached margins, in O(o_i)."""
    return problem.oracle.block_gradient(state, i)


def svm_apply_step(problem: CompositeProblem, state, i, t) -> float:
    """
    w_i <- w_i + t and r_j <- r_j - t y_j x_ji for the o_i examples
    with feature i.  Return the change in f.
    """
    return problem.oracle.apply_step(state, i, t)


##### Evaluation #####


def _fit_weights(w, n_features):
    w = as_vector(w, name='w')
    if len(w) >= n_features:
        return w[:n_features]
    return numpy.concatenate((w, numpy.zeros(n_features - len(w))))


def evaluate_accuracy(w, dataset: SvmDataset) -> float:
    """
    Return the fraction of examples with sign(w'x_j) = y_j.  Scores of
    zero count as incorrect.  Weights of features the dataset lacks are
    ignored and missing weights are zero.
    """
    if dataset.m == 0:
        return 0.0
    scores = dataset.by_example @ _fit_weights(w, dataset.n_features)
    correct = numpy.count_nonzero(scores * dataset.labels > 0)
    return correct / dataset.m


AccuracyRow = collections.namedtuple(
    'AccuracyRow', ('epoch', 'train_accuracy', 'test_accuracy', 'nnz'))


class TrainReport:
    """A training run and its per-epoch accuracy trace."""

    def __init__(self, report: solvers.SolveReport, accuracy):
        self.report = report
        self.accuracy = accuracy

    @property
    def w(self):
        return self.report.x

    @property
    def train_accuracy(self):
        return self.accuracy[-1].train_accuracy

    @property
    def test_accuracy(self):
        return self.accuracy[-1].test_accuracy


def train(problem: CompositeProblem, cfg: solvers.SolveConfig,
          test_data: SvmDataset=None, law: ProbabilityLaw=None,
          w0=None) -> TrainReport:
    """
    Train from `w0` (default zero) with RCDC under `law` (default
    uniform) for the configured epoch budget, recording training and
    (with `test_data`) testing accuracy at the start and after every
    epoch.
    """
    if not isinstance(problem.oracle, SvmOracle):
        raise ProblemError('Not an SVM problem: {!r}'.format(problem.oracle))
    dataset = problem.oracle.dataset
    accuracy = []

    def record(w, epoch, nnz):
        train_acc = evaluate_accuracy(w, dataset)
        test_acc = (None if test_data is None
                    else evaluate_accuracy(w, test_data))
        accuracy.append(AccuracyRow(epoch, train_acc, test_acc, nnz))
        logger.debug('Epoch {}: training accuracy {:.4f}', epoch, train_acc)

    def observe(state, epoch):
        record(state.x, epoch, state.nnz)

    report = solvers.rcdc_run(problem, law or Uniform(), w0, cfg, observe)
    if accuracy[-1].epoch * problem.n != report.iterations:
        # The budget ended mid-epoch
        record(report.x, report.iterations / problem.n,
               int(numpy.count_nonzero(report.x)))
    result = TrainReport(report, accuracy)
    logger.info('Trained {} with gamma = {!r}: training accuracy {:.4f}',
                problem.oracle.loss, problem.oracle.gamma,
                result.train_accuracy)
    return result


##### Models #####


SvmModel = collections.namedtuple(
    'SvmModel', ('w', 'loss', 'gamma', 'n_features'))


def write_model(path, w, loss, gamma) -> None:
    """
    Write a model as `loss`, `gamma`, and `n_features` header lines
    followed by `index value` lines for the nonzero weights.
    """
    w = as_vector(w, name='w')
    nonzero = numpy.flatnonzero(w)
    header = {'loss': loss, 'gamma': float(gamma), 'n_features': len(w)}
    files.write_sparse_vector(path, nonzero, w[nonzero], header)


def read_model(path) -> SvmModel:
    (header, indices, values) = files.read_sparse_vector(path)
    source = files.source_name(path)
    for key in ('loss', 'gamma', 'n_features'):
        if key not in header:
            raise parse.ParseError('Missing model header', key, source)
    if header['loss'] not in LOSSES:
        raise parse.ParseError('Unknown loss', str(header['loss']), source)
    n_features = header['n_features']
    if not isinstance(n_features, int) or n_features < 0:
        raise parse.ParseError('Bad number of features', str(n_features),
                               source)
    if len(indices) and (indices.min() < 0 or indices.max() >= n_features):
        raise parse.ParseError('Weight index out of bounds',
                               str(int(indices.max())), source)
    w = numpy.zeros(n_features)
    w[indices] = values
    return SvmModel(w, header['loss'], float(header['gamma']), n_features)
