"""Utilities for working with NumPy: seeded PRNG streams and vectors."""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


# Needed for PEP 484-style type annotations
from __future__ import annotations

import numpy
import numpy.random


def new_prng(seed: int, stream: int=0, *substreams: int
             ) -> numpy.random.Generator:
    """
    Return a NumPy PRNG for the given stream of the given seed.

    The generator is the 64-bit counter-based Philox generator keyed by
    a `SeedSequence` whose spawn key is the stream ID followed by any
    substream IDs.  Distinct keys give statistically independent
    sequences, so parallel runs of the same configuration only need
    distinct stream IDs, and a run that needs several sequences (e.g.
    restarts) takes them from substreams.
    """
    if seed is None or int(seed) < 0:
        raise ValueError('Seed must be a nonnegative integer: {!r}'
                         .format(seed))
    key = (int(stream), *(int(s) for s in substreams))
    if any(part < 0 for part in key):
        raise ValueError('Stream IDs must be nonnegative integers: {!r}'
                         .format(key))
    seed_seq = numpy.random.SeedSequence(int(seed), spawn_key=key)
    return numpy.random.Generator(numpy.random.Philox(seed_seq))


def spawn_prngs(seed: int, count: int, first_stream: int=0) -> list:
    """Return `count` independent PRNGs on consecutive streams."""
    return [new_prng(seed, stream)
            for stream in range(first_stream, first_stream + count)]


class UniformStream:
    """
    Uniform [0, 1) floats drawn from a NumPy PRNG in batches.

    Solver loops draw one or two uniforms per iteration from Python
    code, where a call into the generator per draw would dominate the
    cost of a sparse coordinate update.  Drawing in batches keeps the
    sequence identical for identical seeds and buffer sizes.
    """

    def __init__(self, prng: numpy.random.Generator, buffer_size: int=8192):
        if buffer_size < 1:
            raise ValueError('Buffer size must be positive: {}'
                             .format(buffer_size))
        self._prng = prng
        self._buffer_size = buffer_size
        self._buffer = []
        self._next = 0

    @property
    def prng(self):
        return self._prng

    def next(self) -> float:
        if self._next >= len(self._buffer):
            self._buffer = self._prng.random(self._buffer_size).tolist()
            self._next = 0
        value = self._buffer[self._next]
        self._next += 1
        return value

    def index(self, n: int) -> int:
        """Return a uniform integer in [0, n)."""
        return min(int(self.next() * n), n - 1)


def as_vector(values, length: int=None, name: str='vector') -> numpy.ndarray:
    """
    Return the given values as a new contiguous float64 vector, checking
    the length and finiteness.
    """
    vector = numpy.array(values, dtype=float).reshape(-1)
    if length is not None and len(vector) != length:
        raise ValueError('Dimension mismatch: {} has length {}, expected {}'
                         .format(name, len(vector), length))
    if not numpy.all(numpy.isfinite(vector)):
        raise ValueError('{} has non-finite entries'.format(name))
    return vector
