"""Perceptual-fit likelihoods from phoneme edit distance, and beta calibration.

A candidate's unnormalized likelihood is exp(-beta * d) where d is the
Levenshtein distance between its citation form and the observed sequence.
Normalization over data space is unnecessary: the posterior normalizes over
the candidate vocabulary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .corpus import ProductionToken
from .errors import NoSuccessesError
from .phonology import PhonemeSeq, edit_distance
from .vocabulary import CandidateVocab

log = logging.getLogger(__name__)

DEFAULT_BETA = 3.2
DEFAULT_GRID = (1.0, 6.0, 0.1)
CALIBRATION_SAMPLE_SIZE = 1000


@dataclass(frozen=True)
class LikelihoodConfig:
    """Inverse-noise scale and the calibration grid."""

    beta: float = DEFAULT_BETA
    grid_lo: float = DEFAULT_GRID[0]
    grid_hi: float = DEFAULT_GRID[1]
    grid_step: float = DEFAULT_GRID[2]

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not (self.grid_lo < self.grid_hi and self.grid_step > 0):
            raise ValueError("grid requires lo < hi and step > 0")

    def grid(self) -> np.ndarray:
        """Inclusive grid values, rounded so 3.2 prints as 3.2."""
        n = int(round((self.grid_hi - self.grid_lo) / self.grid_step)) + 1
        return np.round(np.linspace(self.grid_lo, self.grid_hi, n), 10)


@dataclass(frozen=True)
class LikelihoodVector:
    """Unnormalized likelihoods exp(-beta*d) aligned to V.

    ``log_weights`` (-beta*d) is the numerically safe form used by the
    posterior; ``distances`` is kept for binning and reporting.
    """

    weights: np.ndarray
    log_weights: np.ndarray
    distances: np.ndarray
    beta: float


class DistanceCache:
    """Distance vectors to a fixed vocabulary, keyed by observed sequence.

    Reads dominate; insertion uses setdefault so concurrent writers agree
    on a single stored vector.
    """

    def __init__(self, vocab: CandidateVocab):
        self.vocab = vocab
        self._store: dict[PhonemeSeq, np.ndarray] = {}

    def distances(self, observed: PhonemeSeq) -> np.ndarray:
        found = self._store.get(observed)
        if found is None:
            vec = np.fromiter(
                (edit_distance(cite, observed) for cite in self.vocab.citations),
                dtype=np.int64, count=len(self.vocab),
            )
            vec.setflags(write=False)
            found = self._store.setdefault(observed, vec)
        return found

    def __len__(self) -> int:
        return len(self._store)


def likelihood_vector(
    observed: PhonemeSeq,
    vocab: CandidateVocab,
    cfg: LikelihoodConfig | float = DEFAULT_BETA,
    cache: DistanceCache | None = None,
) -> LikelihoodVector:
    """Perceptual-fit weights: weight_i = exp(-beta * d_i) over the vocabulary."""
    if len(observed) == 0:
        raise ValueError("observed sequence must be non-empty")
    beta = cfg.beta if isinstance(cfg, LikelihoodConfig) else float(cfg)
    if cache is not None:
        if cache.vocab is not vocab:
            raise ValueError("cache was built for a different vocabulary")
        distances = cache.distances(observed)
    else:
        distances = np.fromiter(
            (edit_distance(cite, observed) for cite in vocab.citations),
            dtype=np.int64, count=len(vocab),
        )
    log_weights = -beta * distances.astype(float)
    return LikelihoodVector(
        weights=np.exp(log_weights),
        log_weights=log_weights,
        distances=distances,
        beta=beta,
    )


def _success_matrices(
    successes: Sequence[ProductionToken],
    prior_fn: Callable[[ProductionToken], np.ndarray],
    vocab: CandidateVocab,
    cache: DistanceCache | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cache = cache or DistanceCache(vocab)
    n, v = len(successes), len(vocab)
    dists = np.empty((n, v), dtype=float)
    logprior = np.empty((n, v), dtype=float)
    gloss_idx = np.empty(n, dtype=np.int64)
    for i, token in enumerate(successes):
        dists[i] = cache.distances(token.observed)
        prior = prior_fn(token)
        probs = getattr(prior, "probs", prior)
        with np.errstate(divide="ignore"):
            logprior[i] = np.log(probs)
        gloss_idx[i] = vocab.index(token.gloss)
    return dists, logprior, gloss_idx


def calibration_curve(
    successes: Sequence[ProductionToken],
    prior_fn: Callable[[ProductionToken], np.ndarray],
    vocab: CandidateVocab,
    grid: Sequence[float] | None = None,
    *,
    sample_size: int = CALIBRATION_SAMPLE_SIZE,
    seed: int = 0,
    cache: DistanceCache | None = None,
) -> list[tuple[float, float]]:
    """Sweep the grid and return (beta, sample-mean posterior probability).

    The objective is the probability the posterior assigns to the whole
    sample, reported per token as the geometric mean: exp2 of the mean
    log2 posterior probability of the gloss. The sample is the first
    ``sample_size`` successes of a seed-ordered shuffle.
    """
    successes = [t for t in successes if t.is_success]
    if not successes:
        raise NoSuccessesError("calibration requires at least one success token")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(successes))[:sample_size]
    sample = [successes[i] for i in order]

    dists, logprior, gloss_idx = _success_matrices(sample, prior_fn, vocab, cache)
    rows = np.arange(len(sample))
    if grid is None:
        grid = LikelihoodConfig().grid()
    curve = []
    for beta in grid:
        scores = logprior - float(beta) * dists
        log_post = scores[rows, gloss_idx] - logsumexp(scores, axis=1)
        mean_bits = float(np.mean(log_post)) / np.log(2.0)
        curve.append((float(beta), float(2.0 ** mean_bits)))
    return curve


def _argmax_smallest(curve: Sequence[tuple[float, float]]) -> float:
    best_beta, best_val = curve[0]
    for beta, val in curve[1:]:
        if val > best_val:
            best_beta, best_val = beta, val
    return best_beta


def calibrate_beta(
    successes: Sequence[ProductionToken],
    prior_fn: Callable[[ProductionToken], np.ndarray],
    vocab: CandidateVocab,
    grid: Sequence[float] | None = None,
    *,
    sample_size: int = CALIBRATION_SAMPLE_SIZE,
    seed: int = 0,
    cache: DistanceCache | None = None,
) -> float:
    """Grid value maximizing the sample posterior probability of the glosses.

    Ties break toward the smaller beta.
    """
    curve = calibration_curve(
        successes, prior_fn, vocab, grid,
        sample_size=sample_size, seed=seed, cache=cache,
    )
    return _argmax_smallest(curve)


def calibrate_beta_shared(
    successes: Sequence[ProductionToken],
    prior_fns: Sequence[Callable[[ProductionToken], np.ndarray]],
    vocab: CandidateVocab,
    grid: Sequence[float] | None = None,
    *,
    sample_size: int = CALIBRATION_SAMPLE_SIZE,
    seed: int = 0,
    cache: DistanceCache | None = None,
) -> float:
    """One beta shared across models: maximize the per-model mean objective.

    Every model sees the identical seed-ordered sample, so the result is a
    single scale jointly calibrated across the prior suite.
    """
    if not prior_fns:
        raise ValueError("calibrate_beta_shared needs at least one prior")
    cache = cache or DistanceCache(vocab)
    curves = [
        calibration_curve(successes, fn, vocab, grid,
                          sample_size=sample_size, seed=seed, cache=cache)
        for fn in prior_fns
    ]
    betas = [beta for beta, _ in curves[0]]
    with np.errstate(divide="ignore"):
        log_means = np.mean(
            [np.log2([v for _, v in curve]) for curve in curves], axis=0)
    combined = list(zip(betas, (float(2.0 ** m) for m in log_means)))
    return _argmax_smallest(combined)
