"""Context-conditioned prior distributions over the candidate vocabulary.

Four sources: uniform, smoothed unigram, contextual n-gram with stupid
backoff, and a client for external prior providers speaking the ``/prior``
wire protocol. All priors expose the same estimator surface:
``fit(utterances)`` then ``prior(vocab, context=...)``.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests
from sklearn.base import BaseEstimator

from ._validation import check_prob_vector
from .corpus import SENTINELS, ContextWindow, Utterance, normalize_gloss
from .errors import ProtocolViolationError, ProviderUnreachableError
from .vocabulary import CandidateVocab, count_glosses

log = logging.getLogger(__name__)

#: Sentence-boundary and unknown-word markers for the n-gram token stream.
BOS = "<s>"
UNK = "<unk>"

#: Literal token marking the target position in provider requests.
MASK_TOKEN = "<mask>"

#: Acceptable band for provider probability sums before renormalization.
PROVIDER_SUM_BAND = (0.999, 1.001)


@dataclass(frozen=True)
class PriorDistribution:
    """A probability vector aligned to CandidateVocab order."""

    probs: np.ndarray
    source: str

    def __post_init__(self):
        arr = check_prob_vector(self.probs, name=f"{self.source} prior")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return len(self.probs)


def _addk_distribution(counts, vocab: CandidateVocab, pseudocount: float,
                       source: str) -> PriorDistribution:
    raw = np.fromiter(
        (counts.get(w, 0.0) + pseudocount for w in vocab.words),
        dtype=float, count=len(vocab),
    )
    return PriorDistribution(raw / raw.sum(), source=source)


class UniformPrior(BaseEstimator):
    """Maximally uninformative prior: every candidate gets 1/|V|."""

    def fit(self, utterances=None, y=None):
        return self

    def prior(self, vocab: CandidateVocab, context: ContextWindow | None = None,
              request_id: str | None = None) -> PriorDistribution:
        n = len(vocab)
        return PriorDistribution(np.full(n, 1.0 / n), source="uniform")


class UnigramPrior(BaseEstimator):
    """Smoothed unigram prior estimated from corpus gloss counts.

    P(w) = (count(w) + pseudocount) / sum over V of the same, for every
    context. The vector is cached per vocabulary so repeated calls return
    bitwise-identical probabilities.
    """

    def __init__(self, pseudocount: float = 0.001):
        self.pseudocount = pseudocount

    def fit(self, utterances: Sequence[Utterance], y=None):
        self.counts_ = count_glosses(utterances)
        self._memo = None
        return self

    @classmethod
    def from_counts(cls, counts, pseudocount: float = 0.001) -> "UnigramPrior":
        model = cls(pseudocount)
        model.counts_ = Counter(counts)
        model._memo = None
        return model

    def prior(self, vocab: CandidateVocab, context: ContextWindow | None = None,
              request_id: str | None = None) -> PriorDistribution:
        if self.pseudocount <= 0:
            raise ValueError("pseudocount must be positive")
        memo = getattr(self, "_memo", None)
        if memo is not None and memo[0] is vocab:
            return memo[1]
        dist = _addk_distribution(self.counts_, vocab, self.pseudocount, "unigram")
        self._memo = (vocab, dist)
        return dist


def _utterance_stream(utt: Utterance) -> list[str]:
    tokens = []
    for raw in utt.gloss_tokens:
        word = normalize_gloss(raw)
        tokens.append(UNK if not word or word in SENTINELS else word)
    return tokens


class NgramPrior(BaseEstimator):
    """Backoff n-gram prior over the gloss stream.

    Stupid backoff: a word seen after the context scores count/total at the
    deepest matching order; unseen words fall back to the next shorter
    context scaled by ``backoff``. Scores are renormalized over V, so the
    result is a proper distribution. With no matching context at any order
    the distribution equals the unigram prior exactly.

    ``window`` selects how much discourse feeds the context: "one_utt" uses
    only the masked utterance left of the mask, "context" prepends the
    before-window utterances.
    """

    def __init__(self, order: int = 3, backoff: float = 0.4,
                 pseudocount: float = 0.001, window: str = "context"):
        self.order = order
        self.backoff = backoff
        self.pseudocount = pseudocount
        self.window = window

    def fit(self, utterances: Sequence[Utterance], y=None):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.window not in ("one_utt", "context"):
            raise ValueError("window must be 'one_utt' or 'context'")
        counts: dict[tuple, Counter] = {}
        unigrams: Counter = Counter()
        for utt in utterances:
            stream = [BOS] + _utterance_stream(utt)
            for pos in range(1, len(stream)):
                word = stream[pos]
                unigrams[word] += 1
                for k in range(2, self.order + 1):
                    if pos - (k - 1) < 0:
                        break
                    ctx = tuple(stream[pos - (k - 1):pos])
                    counts.setdefault(ctx, Counter())[word] += 1
        self.context_counts_ = counts
        self.context_totals_ = {c: sum(t.values()) for c, t in counts.items()}
        self.unigram_counts_ = unigrams
        self._memo_unigram = None
        return self

    def _unigram(self, vocab: CandidateVocab) -> PriorDistribution:
        memo = getattr(self, "_memo_unigram", None)
        if memo is not None and memo[0] is vocab:
            return memo[1]
        dist = _addk_distribution(self.unigram_counts_, vocab, self.pseudocount, "ngram")
        self._memo_unigram = (vocab, dist)
        return dist

    def context_tokens(self, context: ContextWindow) -> list[str]:
        """Normalized tokens to the left of the mask, per the window mode."""
        tokens: list[str] = []
        if self.window == "context":
            for utt in context.before:
                tokens.append(BOS)
                tokens.extend(_utterance_stream(utt))
        tokens.append(BOS)
        tokens.extend(_utterance_stream(context.masked_utterance)[:context.mask_index])
        return tokens

    def _scores(self, ctx: tuple, vocab: CandidateVocab) -> np.ndarray:
        if not ctx:
            return self._unigram(vocab).probs.copy()
        lower = self.backoff * self._scores(ctx[1:], vocab)
        total = self.context_totals_.get(ctx)
        if not total:
            return lower
        out = lower
        for word, c in self.context_counts_[ctx].items():
            i = vocab.get_index(word)
            if i is not None:
                out[i] = c / total
        return out

    def prior(self, vocab: CandidateVocab, context: ContextWindow | None = None,
              request_id: str | None = None) -> PriorDistribution:
        if context is None or self.order == 1:
            return self._unigram(vocab)
        ctx = tuple(self.context_tokens(context)[-(self.order - 1):])
        if not any(ctx[k:] in self.context_totals_ for k in range(len(ctx))):
            return self._unigram(vocab)
        scores = self._scores(ctx, vocab)
        return PriorDistribution(scores / scores.sum(), source="ngram")


def build_prior_request(request_id: str, vocab: CandidateVocab,
                        context: ContextWindow) -> dict:
    """Assemble a ``/prior`` request body for one masked token."""
    masked = list(context.masked_utterance.gloss_tokens)
    masked[context.mask_index] = MASK_TOKEN
    return {
        "id": request_id,
        "candidates": list(vocab.words),
        "context_before": [list(u.gloss_tokens) for u in context.before],
        "context_after": [list(u.gloss_tokens) for u in context.after],
        "masked_utterance": masked,
        "mask_index": context.mask_index,
    }


def validate_provider_response(payload: dict, request_id: str,
                               n_candidates: int) -> np.ndarray:
    """Check a provider response body against the wire contract.

    Probabilities must align to the candidate list, be finite and
    non-negative, and sum to 1 within the tolerance band; they are then
    renormalized to sum exactly to 1. Violations raise
    ProtocolViolationError so the caller can skip the token instead of
    silently defaulting.
    """
    if not isinstance(payload, dict):
        raise ProtocolViolationError(f"response is not an object: {payload!r}")
    if payload.get("id") != request_id:
        raise ProtocolViolationError(
            f"response id {payload.get('id')!r} does not match request {request_id!r}"
        )
    probs = payload.get("probabilities")
    if not isinstance(probs, list):
        raise ProtocolViolationError("response lacks a probabilities list")
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n_candidates:
        raise ProtocolViolationError(
            f"expected {n_candidates} probabilities, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ProtocolViolationError("probabilities contain NaN or infinity")
    if np.any(arr < 0):
        raise ProtocolViolationError("probabilities contain negative entries")
    total = float(arr.sum())
    if not (PROVIDER_SUM_BAND[0] <= total <= PROVIDER_SUM_BAND[1]):
        raise ProtocolViolationError(f"probabilities sum to {total!r}, outside the accepted band")
    return arr / total


class HttpProviderClient:
    """HTTP transport for the prior-provider protocol.

    One session per thread; requests are matched to responses by id.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint if endpoint.endswith("/prior") else endpoint.rstrip("/") + "/prior"
        self.timeout = timeout
        self._local = threading.local()

    def _session(self) -> requests.Session:
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def request(self, body: dict) -> dict:
        try:
            resp = self._session().post(self.endpoint, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnreachableError(f"{self.endpoint}: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolViolationError(
                f"{self.endpoint}: HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise ProtocolViolationError(f"{self.endpoint}: non-JSON response") from exc

    def close(self):
        session = getattr(self._local, "session", None)
        if session is not None:
            session.close()


class StdioProviderClient:
    """Line-delimited transport over a provider subprocess's stdio.

    At most one request is in flight at a time; a lock serializes callers.
    """

    def __init__(self, command: str | Sequence[str]):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as exc:
                raise ProviderUnreachableError(f"{self.command}: {exc}") from exc
        return self._proc

    def request(self, body: dict) -> dict:
        with self._lock:
            proc = self._ensure_proc()
            try:
                proc.stdin.write(json.dumps(body) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ProviderUnreachableError(f"{self.command}: {exc}") from exc
        if not line:
            raise ProviderUnreachableError(f"{self.command}: provider closed its stdout")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolViolationError(f"non-JSON response line: {line[:200]!r}") from exc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=5)
        self._proc = None


def make_provider_client(endpoint: str, timeout: float = 30.0):
    """Build a transport from an endpoint string.

    ``http(s)://...`` selects HTTP; ``stdio:<command>`` launches the
    command and speaks line-delimited JSON over its standard streams.
    """
    if endpoint.startswith("stdio:"):
        return StdioProviderClient(endpoint[len("stdio:"):])
    if endpoint.startswith(("http://", "https://")):
        return HttpProviderClient(endpoint, timeout=timeout)
    raise ValueError(f"unsupported provider endpoint: {endpoint!r}")


class ExternalPrior(BaseEstimator):
    """Prior served by an external provider over the wire protocol."""

    def __init__(self, endpoint: str | None = None, timeout: float = 30.0,
                 client=None, provider_id: str | None = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.client = client
        self.provider_id = provider_id

    def fit(self, utterances=None, y=None):
        self.client_ = self.client or make_provider_client(self.endpoint, self.timeout)
        return self

    def _get_client(self):
        if not hasattr(self, "client_"):
            self.fit()
        return self.client_

    def prior(self, vocab: CandidateVocab, context: ContextWindow,
              request_id: str) -> PriorDistribution:
        body = build_prior_request(request_id, vocab, context)
        payload = self._get_client().request(body)
        probs = validate_provider_response(payload, request_id, len(vocab))
        label = self.provider_id or self.endpoint or "provider"
        return PriorDistribution(probs, source=f"external:{label}")


def uniform_prior(vocab: CandidateVocab) -> PriorDistribution:
    return UniformPrior().prior(vocab)


def unigram_prior(model: UnigramPrior, vocab: CandidateVocab) -> PriorDistribution:
    return model.prior(vocab)


def ngram_prior(model: NgramPrior, context: ContextWindow,
                vocab: CandidateVocab) -> PriorDistribution:
    return model.prior(vocab, context)


def external_prior(client, context: ContextWindow, vocab: CandidateVocab,
                   request_id: str) -> PriorDistribution:
    model = ExternalPrior(client=client)
    return model.prior(vocab, context, request_id)
