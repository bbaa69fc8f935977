"""Tests `numpy_utils.py`."""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


import math
import unittest

import numpy

from .. import numpy_utils


class NewPrngTest(unittest.TestCase):

    def test_reproducible(self):
        seed = 0xdeadbeeffeedcafe
        expected = numpy_utils.new_prng(seed, 3).random(10)
        actual = numpy_utils.new_prng(seed, 3).random(10)
        self.assertEqual(expected.tolist(), actual.tolist())

    def test_streams_differ(self):
        draws = [numpy_utils.new_prng(7, stream).random(4).tolist()
                 for stream in range(3)]
        self.assertNotEqual(draws[0], draws[1])
        self.assertNotEqual(draws[1], draws[2])

    def test_substreams_differ(self):
        stream = numpy_utils.new_prng(7, 1).random(4).tolist()
        sub0 = numpy_utils.new_prng(7, 1, 0).random(4).tolist()
        sub1 = numpy_utils.new_prng(7, 1, 1).random(4).tolist()
        self.assertNotEqual(stream, sub0)
        self.assertNotEqual(sub0, sub1)

    def test_spawn_prngs(self):
        prngs = numpy_utils.spawn_prngs(11, 3, first_stream=2)
        self.assertEqual(3, len(prngs))
        self.assertEqual(numpy_utils.new_prng(11, 4).random(5).tolist(),
                         prngs[2].random(5).tolist())

    def test_bad_seeds(self):
        with self.assertRaises(ValueError):
            numpy_utils.new_prng(-1)
        with self.assertRaises(ValueError):
            numpy_utils.new_prng(None)
        with self.assertRaises(ValueError):
            numpy_utils.new_prng(1, -2)


class UniformStreamTest(unittest.TestCase):

    def test_same_as_batches(self):
        prng = numpy_utils.new_prng(5)
        expected = []
        for _ in range(3):
            expected.extend(prng.random(4).tolist())
        stream = numpy_utils.UniformStream(numpy_utils.new_prng(5),
                                           buffer_size=4)
        actual = [stream.next() for _ in range(10)]
        self.assertEqual(expected[:10], actual)

    def test_index_in_range(self):
        stream = numpy_utils.UniformStream(numpy_utils.new_prng(6), 16)
        counts = [0] * 3
        for _ in range(3000):
            counts[stream.index(3)] += 1
        self.assertEqual(3000, sum(counts))
        self.assertTrue(all(count > 800 for count in counts))

    def test_bad_buffer_size(self):
        with self.assertRaises(ValueError):
            numpy_utils.UniformStream(numpy_utils.new_prng(0), 0)


class AsVectorTest(unittest.TestCase):

    def test_copies(self):
        values = numpy.array([1.0, 2.0])
        vector = numpy_utils.as_vector(values, 2)
        vector[0] = 5.0
        self.assertEqual(1.0, values[0])

    def test_flattens(self):
        self.assertEqual([1.0, 2.0, 3.0],
                         numpy_utils.as_vector([[1], [2], [3]]).tolist())

    def test_length(self):
        with self.assertRaises(ValueError):
            numpy_utils.as_vector([1.0, 2.0], 3)

    def test_not_finite(self):
        for bad in (math.inf, -math.inf, math.nan):
            with self.assertRaises(ValueError):
                numpy_utils.as_vector([1.0, bad])
