"""
Block structure of the coordinate space and the norms defined on it.

The space R^N is split into n contiguous blocks of sizes N_1, ..., N_n.
Each block i carries a diagonal quadratic norm

    ||t||_(i) = (sum_j b_i[j] t[j]^2)^(1/2)

with conjugate norm using 1 / b_i[j], and the whole space carries the
weighted norm

    ||x||_W = (sum_i w_i ||x^(i)||_(i)^2)^(1/2)

for a positive weight vector w (typically the block Lipschitz constants
L, or L / p for sampling probabilities p).
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.


from __future__ import annotations

import numpy


def _read_only(array):
    array.flags.writeable = False
    return array


class BlockPartition:
    """
    Decomposition of R^N into n contiguous blocks.

    Block i occupies coordinates `offsets[i]:offsets[i] + sizes[i]`.
    Instances are immutable and safe to share between solver runs.
    """

    def __init__(self, sizes):
        sizes = numpy.array(sizes, dtype=numpy.int64).reshape(-1)
        if len(sizes) == 0:
            raise ValueError('A partition needs at least one block')
        if numpy.any(sizes <= 0):
            raise ValueError(
                'Block sizes must be positive: {}'.format(sizes.tolist()))
        offsets = numpy.zeros(len(sizes), dtype=numpy.int64)
        numpy.cumsum(sizes[:-1], out=offsets[1:])
        self._sizes = _read_only(sizes)
        self._offsets = _read_only(offsets)
        self._dim = int(sizes.sum())
        self._is_coordinate = bool(numpy.all(sizes == 1))

    @classmethod
    def coordinate(cls, dim):
        """Partition of R^dim into `dim` blocks of one coordinate each."""
        return cls(numpy.ones(dim, dtype=numpy.int64))

    @classmethod
    def single(cls, dim):
        """Partition of R^dim into one block holding all coordinates."""
        return cls([dim])

    @property
    def n(self):
        return len(self._sizes)

    @property
    def dim(self):
        return self._dim

    @property
    def sizes(self):
        return self._sizes

    @property
    def offsets(self):
        return self._offsets

    @property
    def is_coordinate(self):
        """Whether every block is a single coordinate."""
        return self._is_coordinate

    def block_slice(self, i):
        if not (0 <= i < len(self._sizes)):
            raise IndexError('Block index out of range [0, {}): {}'
                             .format(len(self._sizes), i))
        start = int(self._offsets[i])
        return slice(start, start + int(self._sizes[i]))

    def block_of_coordinates(self):
        """Return the block index of every coordinate."""
        return numpy.repeat(numpy.arange(self.n), self._sizes)

    def expand(self, values):
        """Repeat one value per block into one value per coordinate."""
        values = numpy.asarray(values, dtype=float)
        if values.shape != (self.n,):
            raise ValueError('Expected {} block values, got shape {}'
                             .format(self.n, values.shape))
        if self._is_coordinate:
            return values
        return numpy.repeat(values, self._sizes)

    def check_vector(self, x):
        if numpy.shape(x) != (self._dim,):
            raise ValueError('Dimension mismatch: expected a vector of '
                             'length {}, got shape {}'
                             .format(self._dim, numpy.shape(x)))

    def __eq__(self, other):
        return (isinstance(other, BlockPartition)
                and numpy.array_equal(self._sizes, other._sizes))

    def __hash__(self):
        return hash(self._sizes.tobytes())

    def __repr__(self):
        if self._is_coordinate:
            return 'BlockPartition.coordinate({})'.format(self._dim)
        return 'BlockPartition({})'.format(self._sizes.tolist())


class BlockNorm:
    """
    Diagonal quadratic norms for all blocks, stored as one positive
    weight per coordinate.
    """

    def __init__(self, weights, partition: BlockPartition):
        weights = numpy.array(weights, dtype=float).reshape(-1)
        partition.check_vector(weights)
        if not numpy.all(weights > 0):
            raise ValueError('Block norm weights must be positive')
        self._weights = _read_only(weights)
        self._partition = partition
        self._is_euclidean = bool(numpy.all(weights == 1.0))

    @classmethod
    def euclidean(cls, partition: BlockPartition):
        return cls(numpy.ones(partition.dim), partition)

    @property
    def weights(self):
        return self._weights

    @property
    def partition(self):
        return self._partition

    @property
    def is_euclidean(self):
        return self._is_euclidean

    def block_weights(self, i):
        return self._weights[self._partition.block_slice(i)]


class GlobalWeights:
    """Positive per-block weights w defining the norm ||.||_W."""

    def __init__(self, w):
        w = numpy.array(w, dtype=float).reshape(-1)
        if len(w) == 0 or not numpy.all(w > 0):
            raise ValueError('Global weights must be positive')
        self._w = _read_only(w)

    @classmethod
    def of(cls, w):
        return w if isinstance(w, GlobalWeights) else cls(w)

    @property
    def w(self):
        return self._w

    def __len__(self):
        return len(self._w)


def extract_block(x, part: BlockPartition, i):
    """Return the slice x^(i) of block i (a view, not a copy)."""
    part.check_vector(x)
    return x[part.block_slice(i)]


def embed_block(t, part: BlockPartition, i):
    """Return U_i t, the length-N vector that is `t` on block i."""
    x = numpy.zeros(part.dim)
    x[part.block_slice(i)] = t
    return x


def block_norm(t, b):
    """Primal block norm ||t||_(i) for diagonal weights `b`."""
    return float(numpy.sqrt(numpy.dot(b * t, t)))


def block_dual_norm(s, b):
    """Conjugate block norm ||s||*_(i) for diagonal weights `b`."""
    return float(numpy.sqrt(numpy.dot(s / b, s)))


def _coordinate_weights(w, bn: BlockNorm, part: BlockPartition):
    w = GlobalWeights.of(w)
    if len(w) != part.n:
        raise ValueError('Dimension mismatch: {} weights for {} blocks'
                         .format(len(w), part.n))
    if bn.partition != part:
        raise ValueError('Block norm defined on a different partition')
    return part.expand(w.w) * bn.weights


def norm_w(x, w, bn: BlockNorm, part: BlockPartition):
    """Global norm ||x||_W = (sum_i w_i ||x^(i)||_(i)^2)^(1/2)."""
    part.check_vector(x)
    weights = _coordinate_weights(w, bn, part)
    return float(numpy.sqrt(numpy.dot(weights * x, x)))


def dual_norm_w(y, w, bn: BlockNorm, part: BlockPartition):
    """Conjugate global norm ||y||*_W = (sum_i ||y^(i)||*_(i)^2 / w_i)^(1/2)."""
    part.check_vector(y)
    weights = _coordinate_weights(w, bn, part)
    return float(numpy.sqrt(numpy.dot(y / weights, y)))


def sharp(s, b):
    """
    Return s#, the minimizer of -<s, t> + 1/2 ||t||^2 for the diagonal
    block norm with weights `b`, that is, B^-1 s.

    Works on block vectors and on scalars (singleton blocks).
    """
    if numpy.any(numpy.asarray(b) <= 0):
        raise ValueError('Block norm weights must be positive')
    return s / b
