"""
Sampling of blocks for randomized coordinate descent.

A `ProbabilityLaw` describes how the block of each iteration is chosen.
Resolving a law against the block Lipschitz constants gives a sampler
that draws block indices from a `UniformStream`.  Static laws (fixed
vector, power law) draw by binary search in a cumulative table, uniform
sampling and the support-shrinking law draw in constant time.  Blocks
whose Lipschitz constant is zero are never drawn; their probability mass
is spread over the remaining blocks.
"""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


from __future__ import annotations

import bisect

import numpy

from .numpy_utils import UniformStream


##### Support Set #####


class SupportSet:
    """
    Set of block indices with O(1) insertion, removal, and uniform
    sampling.

    Members are kept in a compact list and each block's position in the
    list is kept in a dense array (-1 for non-members).  Removal swaps
    the last member into the vacated position.  Blocks that are not
    tracked (e.g. frozen blocks) are never added.
    """

    def __init__(self, n: int, tracked=None):
        self._position = numpy.full(n, -1, dtype=numpy.int64)
        self._items = []
        if tracked is not None:
            tracked = numpy.asarray(tracked, dtype=bool)
            if tracked.shape != (n,):
                raise ValueError('Tracking mask must have length {}'
                                 .format(n))
        self._tracked = tracked

    @property
    def items(self):
        """Members in storage order.  Do not modify."""
        return self._items

    def __len__(self):
        return len(self._items)

    def __contains__(self, i):
        return self._position[i] >= 0

    def __iter__(self):
        return iter(self._items)

    def add(self, i):
        if self._position[i] >= 0:
            return
        if self._tracked is not None and not self._tracked[i]:
            return
        self._position[i] = len(self._items)
        self._items.append(i)

    def remove(self, i):
        position = int(self._position[i])
        if position < 0:
            return
        last = self._items.pop()
        if last != i:
            self._items[position] = last
            self._position[last] = position
        self._position[i] = -1

    def update(self, i, is_member):
        if is_member:
            self.add(i)
        else:
            self.remove(i)

    def clear(self):
        self._position[self._items] = -1
        self._items.clear()

    def to_array(self):
        return numpy.array(sorted(self._items), dtype=numpy.int64)


##### Probability Laws #####


class ProbabilityLaw:
    """How the block index of each iteration is chosen."""

    uses_support = False

    def resolve(self, lipschitz) -> 'ResolvedLaw':
        raise NotImplementedError


class Uniform(ProbabilityLaw):
    """Every sampleable block with equal probability."""

    def resolve(self, lipschitz):
        return _TableLaw(_active_blocks(lipschitz), len(lipschitz), None)

    def __repr__(self):
        return 'Uniform()'


class Fixed(ProbabilityLaw):
    """A fixed probability vector with positive entries summing to 1."""

    def __init__(self, p):
        p = numpy.array(p, dtype=float).reshape(-1)
        if len(p) == 0 or not numpy.all(p > 0):
            raise ValueError('Probabilities must be positive')
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError('Probabilities must sum to 1, not {!r}'
                             .format(float(p.sum())))
        self.p = p

    def resolve(self, lipschitz):
        if len(self.p) != len(lipschitz):
            raise ValueError('Dimension mismatch: {} probabilities for {} '
                             'blocks'.format(len(self.p), len(lipschitz)))
        active = _active_blocks(lipschitz)
        return _TableLaw(active, len(lipschitz), self.p[active])

    def __repr__(self):
        return 'Fixed({!r})'.format(self.p.tolist())


class PowerLaw(ProbabilityLaw):
    """Probabilities proportional to L_i ** alpha."""

    def __init__(self, alpha):
        if not alpha >= 0:
            raise ValueError('Exponent must be nonnegative: {!r}'
                             .format(alpha))
        self.alpha = float(alpha)

    def resolve(self, lipschitz):
        active = _active_blocks(lipschitz)
        if self.alpha == 0:
            return _TableLaw(active, len(lipschitz), None)
        lipschitz = numpy.asarray(lipschitz, dtype=float)
        return _TableLaw(
            active, len(lipschitz), lipschitz[active] ** self.alpha)

    def __repr__(self):
        return 'PowerLaw({!r})'.format(self.alpha)


class QShrinking(ProbabilityLaw):
    """
    Uniform sampling before iteration `k0`; afterwards, with probability
    `q` a uniform member of the current support and otherwise a uniform
    block.  An empty support falls back to uniform.
    """

    uses_support = True

    def __init__(self, q, k0=0):
        if not 0 <= q < 1:
            raise ValueError('Shrinking fraction must be in [0, 1): {!r}'
                             .format(q))
        if k0 < 0:
            raise ValueError('Activation iteration must be nonnegative: '
                             '{!r}'.format(k0))
        self.q = float(q)
        self.k0 = int(k0)

    def resolve(self, lipschitz):
        return _ShrinkingLaw(
            _active_blocks(lipschitz), len(lipschitz), self.q, self.k0)

    def __repr__(self):
        return 'QShrinking({!r}, {!r})'.format(self.q, self.k0)


class SwitchingLaw(ProbabilityLaw):
    """
    One law for the first `switch_k` iterations and another afterwards,
    e.g. Lipschitz-proportional sampling followed by uniform sampling.
    """

    def __init__(self, first: ProbabilityLaw, second: ProbabilityLaw,
                 switch_k: int):
        if switch_k < 0:
            raise ValueError('Switch iteration must be nonnegative: {!r}'
                             .format(switch_k))
        self.first = first
        self.second = second
        self.switch_k = int(switch_k)

    @property
    def uses_support(self):
        return self.first.uses_support or self.second.uses_support

    def resolve(self, lipschitz):
        return _SwitchingLaw(
            self.first.resolve(lipschitz),
            self.second.resolve(lipschitz),
            self.switch_k)

    def __repr__(self):
        return 'SwitchingLaw({!r}, {!r}, {!r})'.format(
            self.first, self.second, self.switch_k)


def _active_blocks(lipschitz):
    lipschitz = numpy.asarray(lipschitz, dtype=float)
    if numpy.any(lipschitz < 0) or not numpy.all(numpy.isfinite(lipschitz)):
        raise ValueError('Lipschitz constants must be finite and '
                         'nonnegative')
    active = numpy.flatnonzero(lipschitz > 0)
    if len(active) == 0:
        raise ValueError('No block has a positive Lipschitz constant')
    return active


##### Resolved Laws (Samplers) #####


class ResolvedLaw:
    """A probability law bound to a particular set of block constants."""

    def sample(self, stream: UniformStream, support: SupportSet, k: int):
        raise NotImplementedError

    def probabilities(self, support: SupportSet=None, k: int=0):
        """Return the probability of every block at iteration `k`."""
        raise NotImplementedError


class _TableLaw(ResolvedLaw):

    def __init__(self, active, n, weights):
        self.n = n
        self.active = active.tolist()
        self.n_active = len(self.active)
        if weights is None:
            self.cumulative = None
            self.total = None
        else:
            cumulative = numpy.cumsum(weights)
            self.cumulative = cumulative.tolist()
            self.total = float(cumulative[-1])

    def sample(self, stream, support=None, k=0):
        if self.cumulative is None:
            return self.active[stream.index(self.n_active)]
        idx = bisect.bisect_right(self.cumulative, stream.next() * self.total)
        return self.active[min(idx, self.n_active - 1)]

    def probabilities(self, support=None, k=0):
        p = numpy.zeros(self.n)
        if self.cumulative is None:
            p[self.active] = 1 / self.n_active
        else:
            weights = numpy.diff(self.cumulative, prepend=0.0)
            p[self.active] = weights / self.total
        return p


class _ShrinkingLaw(ResolvedLaw):

    def __init__(self, active, n, q, k0):
        self.uniform = _TableLaw(active, n, None)
        self.q = q
        self.k0 = k0

    def sample(self, stream, support=None, k=0):
        if k >= self.k0 and support is not None and len(support) > 0:
            if stream.next() < self.q:
                items = support.items
                return items[stream.index(len(items))]
        return self.uniform.sample(stream)

    def probabilities(self, support=None, k=0):
        p = self.uniform.probabilities()
        if k >= self.k0 and support is not None and len(support) > 0:
            p *= 1 - self.q
            p[support.to_array()] += self.q / len(support)
        return p


class _SwitchingLaw(ResolvedLaw):

    def __init__(self, first, second, switch_k):
        self.first = first
        self.second = second
        self.switch_k = switch_k

    def sample(self, stream, support=None, k=0):
        law = self.first if k < self.switch_k else self.second
        return law.sample(stream, support, k)

    def probabilities(self, support=None, k=0):
        law = self.first if k < self.switch_k else self.second
        return law.probabilities(support, k)


def resolve_law(law: ProbabilityLaw, lipschitz) -> ResolvedLaw:
    return law.resolve(lipschitz)


def sample_block(
        law: ResolvedLaw,
        stream: UniformStream,
        support: SupportSet=None,
        k: int=0,
) -> int:
    """
    Draw the block index for iteration `k` according to the given
    resolved law.  `support` must be current when the law shrinks to the
    support.
    """
    return law.sample(stream, support, k)
