"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive: plain recursion, direct summation,
exhaustive pairwise counting. None of it shares code with the library
paths it checks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


def recursive_edit_distance(a: tuple, b: tuple) -> int:
    """Levenshtein by plain recursion with memoization on suffix lengths."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a):
            return len(b) - j
        if j == len(b):
            return len(a) - i
        same = go(i + 1, j + 1) + (0 if a[i] == b[j] else 1)
        return min(same, go(i + 1, j) + 1, go(i, j + 1) + 1)

    result = go(0, 0)
    go.cache_clear()
    return result


def direct_entropy_bits(probs) -> float:
    """H(p) by direct summation; 0 log 0 = 0."""
    return -sum(p * math.log2(p) for p in probs if p > 0)


def direct_kl_bits(p, q) -> float:
    return sum(pi * math.log2(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def direct_surprisal_bits(prob: float) -> float:
    return -math.log2(prob)


def linear_posterior(prior, weights):
    """Posterior by direct elementwise product in linear space."""
    numer = [p * w for p, w in zip(prior, weights)]
    total = sum(numer)
    return [x / total for x in numer]


def exact_posterior_fractions(prior_weights, distances, beta_num, beta_den):
    """Posterior with exact rational weights, for frozen golden values.

    Uses exp(-beta*d) evaluated in float but combines in Fraction space so
    the normalization itself adds no error beyond the exp calls.
    """
    weights = [
        Fraction(p) * Fraction(math.exp(-(beta_num / beta_den) * d))
        for p, d in zip(prior_weights, distances)
    ]
    total = sum(weights)
    return [w / total for w in weights]


def pairwise_auc(success_scores, failure_scores) -> float:
    """Mann-Whitney statistic: P(failure > success) + 0.5 P(tie)."""
    wins = ties = 0
    for f in failure_scores:
        for s in success_scores:
            if f > s:
                wins += 1
            elif f == s:
                ties += 1
    return (wins + 0.5 * ties) / (len(success_scores) * len(failure_scores))
