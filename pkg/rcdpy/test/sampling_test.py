"""Tests `sampling.py`."""

# Copyright (c) 2024 The rcdpy authors.
#
# This is free, open software released under the MIT license.  See
# `LICENSE` for details.


import math
import unittest

import numpy
import scipy.stats

from .. import sampling
from ..numpy_utils import UniformStream, new_prng


def counts(law, n, draws, support=None, k=0, seed=0):
    """Count the draws of each of the `n` blocks."""
    stream = UniformStream(new_prng(seed))
    drawn = numpy.zeros(n, dtype=numpy.int64)
    for _ in range(draws):
        drawn[law.sample(stream, support, k)] += 1
    return drawn


class SupportSetTest(unittest.TestCase):

    def test_add_remove(self):
        support = sampling.SupportSet(6)
        for i in (4, 1, 3, 1):
            support.add(i)
        self.assertEqual(3, len(support))
        self.assertIn(1, support)
        self.assertNotIn(0, support)
        support.remove(4)
        support.remove(5)
        self.assertEqual([1, 3], support.to_array().tolist())
        self.assertEqual({1, 3}, set(support))

    def test_update(self):
        support = sampling.SupportSet(3)
        support.update(2, True)
        support.update(0, True)
        support.update(2, False)
        self.assertEqual([0], support.items)

    def test_untracked_blocks_never_added(self):
        support = sampling.SupportSet(3, tracked=[True, False, True])
        support.add(1)
        support.add(2)
        self.assertEqual([2], support.to_array().tolist())
        with self.assertRaises(ValueError):
            sampling.SupportSet(3, tracked=[True])

    def test_clear(self):
        support = sampling.SupportSet(4)
        support.add(0)
        support.add(3)
        support.clear()
        self.assertEqual(0, len(support))
        self.assertNotIn(3, support)
        support.add(3)
        self.assertEqual([3], support.items)


class ProbabilitiesTest(unittest.TestCase):

    def test_uniform(self):
        law = sampling.Uniform().resolve([1.0, 2.0, 3.0, 4.0])
        self.assertEqual([0.25] * 4, law.probabilities().tolist())

    def test_zero_constants_excluded(self):
        law = sampling.Uniform().resolve([1.0, 0.0, 2.0])
        self.assertEqual([0.5, 0.0, 0.5], law.probabilities().tolist())
        law = sampling.PowerLaw(1).resolve([1.0, 0.0, 3.0])
        numpy.testing.assert_allclose([0.25, 0.0, 0.75],
                                      law.probabilities())

    def test_power_law(self):
        lipschitz = numpy.array([1.0, 4.0, 9.0])
        for alpha in (0.0, 0.5, 1.0, 2.0):
            p = sampling.PowerLaw(alpha).resolve(lipschitz).probabilities()
            expected = lipschitz ** alpha / numpy.sum(lipschitz ** alpha)
            numpy.testing.assert_allclose(expected, p, rtol=1e-12)

    def test_fixed(self):
        law = sampling.Fixed([0.2, 0.3, 0.5]).resolve([1.0, 1.0, 1.0])
        numpy.testing.assert_allclose([0.2, 0.3, 0.5], law.probabilities())
        with self.assertRaises(ValueError):
            sampling.Fixed([0.2, 0.3, 0.6])
        with self.assertRaises(ValueError):
            sampling.Fixed([0.0, 1.0])
        with self.assertRaises(ValueError):
            sampling.Fixed([0.5, 0.5]).resolve([1.0, 1.0, 1.0])

    def test_q_shrinking(self):
        support = sampling.SupportSet(10)
        support.add(1)
        law = sampling.QShrinking(0.9, k0=5).resolve(numpy.ones(10))
        p = law.probabilities(support, k=5)
        self.assertAlmostEqual(0.91, p[1])
        self.assertAlmostEqual(0.01, p[0])
        self.assertAlmostEqual(1.0, p.sum())
        # Uniform before activation and for an empty support
        self.assertEqual([0.1] * 10, law.probabilities(support, 4).tolist())
        support.clear()
        self.assertEqual([0.1] * 10, law.probabilities(support, 9).tolist())

    def test_switching(self):
        lipschitz = [1.0, 3.0]
        law = sampling.SwitchingLaw(
            sampling.PowerLaw(1), sampling.Uniform(), 10).resolve(lipschitz)
        numpy.testing.assert_allclose([0.25, 0.75], law.probabilities(k=9))
        numpy.testing.assert_allclose([0.5, 0.5], law.probabilities(k=10))

    def test_uses_support(self):
        self.assertFalse(sampling.Uniform().uses_support)
        self.assertTrue(sampling.QShrinking(0.5).uses_support)
        self.assertTrue(sampling.SwitchingLaw(
            sampling.Uniform(), sampling.QShrinking(0.5), 3).uses_support)

    def test_bad_parameters(self):
        with self.assertRaises(ValueError):
            sampling.PowerLaw(-1)
        with self.assertRaises(ValueError):
            sampling.QShrinking(1.0)
        with self.assertRaises(ValueError):
            sampling.QShrinking(0.5, -1)
        with self.assertRaises(ValueError):
            sampling.SwitchingLaw(sampling.Uniform(), sampling.Uniform(), -1)

    def test_unsampleable(self):
        with self.assertRaises(ValueError):
            sampling.Uniform().resolve([0.0, 0.0])
        with self.assertRaises(ValueError):
            sampling.Uniform().resolve([1.0, -1.0])
        with self.assertRaises(ValueError):
            sampling.PowerLaw(1).resolve([1.0, math.inf])


class FrequencyTest(unittest.TestCase):

    def assert_fits(self, expected, counts, alpha=1e-4):
        # One goodness-of-fit test over the blocks that can be drawn
        expected = numpy.asarray(expected, dtype=float)
        drawable = expected > 0
        self.assertEqual(0, counts[~drawable].sum())
        draws = counts.sum()
        result = scipy.stats.chisquare(counts[drawable],
                                       expected[drawable] * draws)
        self.assertGreater(result.pvalue, alpha, (expected, counts))

    def test_uniform(self):
        law = sampling.Uniform().resolve(numpy.ones(4))
        self.assert_fits([0.25] * 4, counts(law, 4, 200_000))

    def test_power_law(self):
        law = sampling.PowerLaw(1).resolve([1.0, 3.0])
        self.assert_fits([0.25, 0.75], counts(law, 2, 200_000))

    def test_fixed(self):
        p = [0.5, 0.1, 0.15, 0.25]
        law = sampling.Fixed(p).resolve(numpy.ones(4))
        self.assert_fits(p, counts(law, 4, 200_000, seed=3))

    def test_zero_constant_never_drawn(self):
        law = sampling.PowerLaw(0.5).resolve([1.0, 0.0, 4.0])
        self.assert_fits([1 / 3, 0.0, 2 / 3], counts(law, 3, 30_000))

    def test_q_shrinking(self):
        support = sampling.SupportSet(10)
        support.add(1)
        law = sampling.QShrinking(0.9).resolve(numpy.ones(10))
        expected = [0.01] * 10
        expected[1] = 0.91
        self.assert_fits(expected, counts(law, 10, 100_000, support))

    def test_sample_block(self):
        law = sampling.resolve_law(sampling.Uniform(), [0.0, 1.0])
        stream = UniformStream(new_prng(1))
        self.assertEqual({1}, {sampling.sample_block(law, stream)
                               for _ in range(100)})
