"""Posterior decoding: combine prior and likelihood, summarize uncertainty.

All probability math runs in natural-log space (a vocabulary of thousands
with beta up to 6 underflows linear space); surprisal and entropy are
reported in bits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator

from .corpus import ProductionToken, TokenKind
from .errors import DegenerateDenominatorError, NoSuccessesError
from .likelihood import (
    DEFAULT_BETA,
    DistanceCache,
    LikelihoodConfig,
    LikelihoodVector,
    calibrate_beta,
    likelihood_vector,
)
from .priors import UniformPrior
from .vocabulary import CandidateVocab

log = logging.getLogger(__name__)

_LOG2 = np.log(2.0)


def _probs_of(dist) -> np.ndarray:
    probs = getattr(dist, "probs", None)
    if probs is None:
        probs = np.asarray(dist, dtype=float)
    return probs


def posterior(prior, lik) -> np.ndarray:
    """Normalized elementwise product of prior and likelihood over V.

    Accepts PriorDistribution or a plain probability vector for ``prior``,
    and LikelihoodVector or a plain weight vector for ``lik``. Raises
    DegenerateDenominatorError when the prior is zero everywhere (the
    likelihood itself is strictly positive).
    """
    probs = _probs_of(prior)
    if isinstance(lik, LikelihoodVector):
        log_lik = lik.log_weights
    else:
        weights = np.asarray(lik, dtype=float)
        with np.errstate(divide="ignore"):
            log_lik = np.log(weights)
    if probs.shape != log_lik.shape:
        raise ValueError(
            f"prior and likelihood are not aligned: {probs.shape} vs {log_lik.shape}"
        )
    with np.errstate(divide="ignore"):
        scores = np.log(probs) + log_lik
    if np.all(np.isneginf(scores)):
        raise DegenerateDenominatorError("prior mass is zero on every candidate")
    post = np.exp(scores - logsumexp(scores))
    return post / post.sum()


def surprisal(dist, word: str, vocab: CandidateVocab) -> float:
    """Negative log2 probability assigned to ``word``."""
    probs = _probs_of(dist)
    idx = vocab.index(word)
    with np.errstate(divide="ignore"):
        return float(-np.log2(probs[idx]))


def entropy(dist) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0.

    Equal-mass distributions short-circuit to log2(support size) so the
    uniform case is exact rather than accurate to rounding.
    """
    probs = _probs_of(dist)
    positive = probs[probs > 0]
    if positive.size == 0:
        raise ValueError("entropy of an all-zero vector is undefined")
    if np.all(positive == positive[0]):
        return float(np.log2(positive.size))
    return float(-np.sum(positive * np.log2(positive)))


@dataclass(frozen=True)
class PosteriorResult:
    """Scored posterior for one production token.

    ``posterior`` may be None when results are rebuilt from a scores CSV;
    scoring always fills it.
    """

    token_id: str
    kind: TokenKind
    posterior: np.ndarray | None
    posterior_entropy_bits: float
    prior_surprisal_bits: float | None = None
    posterior_surprisal_bits: float | None = None
    edit_distance_to_gloss: int | None = None
    top_k: tuple[tuple[str, float], ...] = ()
    age_months: float | None = None


def _top_k(post: np.ndarray, vocab: CandidateVocab, k: int) -> tuple[tuple[str, float], ...]:
    # stable sort keeps ties in vocabulary (lexicographic) order
    order = np.argsort(-post, kind="stable")[:k]
    return tuple((vocab.words[i], float(post[i])) for i in order)


def score_token(
    token: ProductionToken,
    prior_model,
    vocab: CandidateVocab,
    cfg: LikelihoodConfig | float = DEFAULT_BETA,
    *,
    cache: DistanceCache | None = None,
    top_k: int = 5,
) -> PosteriorResult:
    """Compute the posterior and its summaries for one token.

    Successes get prior/posterior surprisal and the edit distance to the
    gloss citation form; failures get entropy only. A success whose gloss
    is missing from V raises WordNotInVocabError so the pipeline can
    exclude it with a reason instead of scoring it silently.
    """
    prior = prior_model.prior(vocab, context=token.context, request_id=token.id)
    lik = likelihood_vector(token.observed, vocab, cfg, cache=cache)
    post = posterior(prior, lik)

    prior_bits = post_bits = None
    dist_to_gloss = None
    if token.kind is TokenKind.SUCCESS:
        idx = vocab.index(token.gloss)  # raises WordNotInVocabError
        prior_bits = surprisal(prior, token.gloss, vocab)
        post_bits = surprisal(post, token.gloss, vocab)
        dist_to_gloss = int(lik.distances[idx])
    return PosteriorResult(
        token_id=token.id,
        kind=token.kind,
        posterior=post,
        posterior_entropy_bits=entropy(post),
        prior_surprisal_bits=prior_bits,
        posterior_surprisal_bits=post_bits,
        edit_distance_to_gloss=dist_to_gloss,
        top_k=_top_k(post, vocab, top_k),
        age_months=token.age_months,
    )


class PosteriorDecoder(BaseEstimator):
    """Bayesian word decoder over a fixed candidate vocabulary.

    Combines a context prior with edit-distance likelihoods. With
    ``beta="auto"`` fit() calibrates beta on the success tokens it is
    given; otherwise fit() just freezes the configured value. The fitted
    decoder scores tokens, predicts the top word, or returns full
    posterior matrices.
    """

    def __init__(self, vocab: CandidateVocab | None = None, prior=None,
                 beta: float | str = DEFAULT_BETA, top_k: int = 5,
                 calibration_sample: int = 1000, seed: int = 0):
        self.vocab = vocab
        self.prior = prior
        self.beta = beta
        self.top_k = top_k
        self.calibration_sample = calibration_sample
        self.seed = seed

    def _prior_model(self):
        return self.prior if self.prior is not None else UniformPrior()

    def fit(self, tokens: Sequence[ProductionToken] = (), y=None):
        if self.vocab is None:
            raise ValueError("PosteriorDecoder requires a vocabulary")
        self.cache_ = DistanceCache(self.vocab)
        if self.beta == "auto":
            successes = [t for t in tokens if t.is_success and t.gloss in self.vocab]
            if not successes:
                raise NoSuccessesError("beta='auto' needs success tokens to calibrate on")
            prior_model = self._prior_model()
            self.beta_ = calibrate_beta(
                successes,
                lambda t: prior_model.prior(self.vocab, context=t.context, request_id=t.id),
                self.vocab,
                sample_size=self.calibration_sample,
                seed=self.seed,
                cache=self.cache_,
            )
        else:
            self.beta_ = float(self.beta)
        return self

    def _check_fitted(self):
        if not hasattr(self, "beta_"):
            raise ValueError("decoder is not fitted; call fit() first")

    def score_token(self, token: ProductionToken) -> PosteriorResult:
        self._check_fitted()
        return score_token(
            token, self._prior_model(), self.vocab, self.beta_,
            cache=self.cache_, top_k=self.top_k,
        )

    def score_tokens(self, tokens: Sequence[ProductionToken]) -> list[PosteriorResult]:
        return [self.score_token(t) for t in tokens]

    def predict_proba(self, tokens: Sequence[ProductionToken]) -> np.ndarray:
        results = self.score_tokens(tokens)
        return np.vstack([r.posterior for r in results])

    def predict(self, tokens: Sequence[ProductionToken]) -> list[str]:
        return [r.top_k[0][0] for r in self.score_tokens(tokens)]
