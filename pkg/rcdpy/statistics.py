# Statistics functions for summarizing repeated randomized runs: exemplar
# quantiles, binomial standard errors, and envelopes of traces over seeds.

# Copyright (c) 2024 The rcdpy authors.
#
# This is free software released under the MIT license.  See `LICENSE`
# for details.

import math

import numpy


def quantile(data, probability, key=None):
    """Return the smallest item `x` of the data such that
    `probability <= empirical-CDF(x)`.

    The quantiles are exemplars: elements of the data, never
    interpolated.  `quantile(data, 0)` is the minimum, `quantile(data,
    1)` the maximum, and `quantile(data, 1/2)` the exemplar median.

    * data: Iterable of items.
    * probability: Probability of the desired quantile.
    * key: Ordering key for each item, as for `sorted`.
    """
    if not (0 <= probability <= 1):
        raise ValueError(
            'Probability not in [0,1]: {}'.format(probability))
    data = sorted(data, key=key)
    if len(data) == 0:
        raise ValueError('Empty data.')
    return data[max(math.ceil(len(data) * probability) - 1, 0)]


def median(data, key=None):
    return quantile(data, 0.5, key)


def binomial_sigma(p, n) -> float:
    """Standard error sqrt(p (1 - p) / n) of a frequency over n trials."""
    if n < 1:
        raise ValueError('Number of trials must be positive: {}'.format(n))
    if not 0 <= p <= 1:
        raise ValueError('Probability not in [0,1]: {}'.format(p))
    return math.sqrt(p * (1 - p) / n)


def frequency_at_least(successes, trials, p, sigmas=3.0) -> bool:
    """
    Whether an observed success frequency is consistent with a success
    probability of at least `p`, allowing `sigmas` standard errors.
    """
    return successes / trials >= p - sigmas * binomial_sigma(p, trials)


def envelope(traces):
    """
    Return (epoch, mean, min, max, count) rows over the traces at every
    epoch that appears in any trace.

    traces: Iterable<Iterable<(epoch, value)>>
        One sequence of (epoch, value) pairs per seed.
    """
    by_epoch = {}
    for trace in traces:
        for (epoch, value) in trace:
            by_epoch.setdefault(epoch, []).append(value)
    rows = []
    for epoch in sorted(by_epoch):
        values = numpy.array(by_epoch[epoch], dtype=float)
        rows.append((epoch, float(values.mean()), float(values.min()),
                     float(values.max()), len(values)))
    return rows
