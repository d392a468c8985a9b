"""Acceptance suite.

One test per criterion, each printing a PASS/FAIL line (see conftest).
Expected values come from independent oracles in oracles.py and from the
generators in synth.py; runtime ceilings are asserted where stated.
"""

import itertools
import json
import math
import time
from collections import Counter

import numpy as np
import pytest

from mishear.analysis import kl_divergence, roc_failures
from mishear.fixtures import fixture_corpus_path, fixture_lexicon_path
from mishear.likelihood import DistanceCache, calibrate_beta
from mishear.phonology import PhonemeSeq, edit_distance
from mishear.pipeline import RunConfig, run_pipeline
from mishear.posterior import entropy, posterior, score_token
from mishear.priors import NgramPrior, UniformPrior, UnigramPrior, uniform_prior
from mishear.vocabulary import CandidateVocab

from oracles import linear_posterior, pairwise_auc, recursive_edit_distance
from synth import (
    BigramProcess,
    CorruptionSampler,
    bigram_corpus_and_tokens,
    make_context,
    make_token,
    random_vocab,
    synth_success_tokens,
)

acceptance = pytest.mark.acceptance

GRID_STEP = 0.1


def big_vocab(n=7904) -> CandidateVocab:
    letters = "abcdefghijklmnopqrstuvwxyz"
    entries = []
    for i in range(n):
        segs = [letters[(i // 26 ** k) % 26] for k in range(3)]
        entries.append((f"w{i:04d}", PhonemeSeq(segs), 1))
    return CandidateVocab.from_entries(entries)


@acceptance
def test_uniform_prior_surprisal():
    """|V| = 7904 forces mean uniform prior surprisal of 12.95 bits."""
    start = time.monotonic()
    vocab = big_vocab()
    assert len(vocab) == 7904
    glosses = [vocab.words[i] for i in (0, 1234, 4000, 6500, 7903)]
    tokens = [
        make_token(vocab.citation(g), g, token_id=f"s{i}")
        for i, g in enumerate(glosses)
    ]
    model = UniformPrior()
    cache = DistanceCache(vocab)
    results = [score_token(t, model, vocab, 3.2, cache=cache) for t in tokens]
    bits = [r.prior_surprisal_bits for r in results]
    assert all(abs(b - 12.95) <= 0.005 for b in bits)
    assert abs(float(np.mean(bits)) - 12.95) <= 0.005
    elapsed = time.monotonic() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


@acceptance
def test_beta_recovery():
    """Calibration recovers the generating beta within one grid step."""
    start = time.monotonic()
    alphabet = "abcdef"
    gen_rng = np.random.default_rng(2024)
    vocab = random_vocab(50, alphabet, gen_rng)
    per_seed_hits = Counter()
    aggregate_ok = []
    for beta_star in (1.5, 2.5, 4.0):
        sampler = CorruptionSampler(vocab, alphabet, beta_star, max_len=4)
        prior = uniform_prior(vocab)
        pooled = []
        for seed in range(5):
            rng = np.random.default_rng(seed)
            tokens = synth_success_tokens(vocab, sampler, 2000, rng)
            pooled.extend(tokens)
            beta_hat = calibrate_beta(
                tokens, lambda t: prior, vocab, sample_size=2000, seed=seed)
            if abs(beta_hat - beta_star) <= GRID_STEP + 1e-9:
                per_seed_hits[seed] += 1
        beta_pooled = calibrate_beta(
            pooled, lambda t: prior, vocab, sample_size=len(pooled), seed=0)
        aggregate_ok.append(abs(beta_pooled - beta_star) <= GRID_STEP + 1e-9)
    for seed in range(5):
        assert per_seed_hits[seed] >= 2, f"seed {seed}: {per_seed_hits[seed]}/3"
    assert all(aggregate_ok), f"aggregate misses: {aggregate_ok}"
    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"took {elapsed:.1f}s"


@acceptance
def test_edit_distance_oracle():
    """DP distance equals the brute-force recursive oracle on ~1e4 pairs."""
    start = time.monotonic()
    alphabet = ("k", "æ", "t", "ʃ")
    short = []
    for length in (1, 2, 3):
        short.extend(PhonemeSeq(p) for p in itertools.product(alphabet, repeat=length))
    pairs = list(itertools.product(short, short))  # 84^2 = 7056, exhaustive
    rng = np.random.default_rng(7)
    longer = []
    for length in (4, 5):
        longer.extend(PhonemeSeq(p) for p in itertools.product(alphabet, repeat=length))
    for _ in range(4000):
        a = longer[rng.integers(len(longer))]
        b = longer[rng.integers(len(longer))] if rng.random() < 0.7 else \
            short[rng.integers(len(short))]
        pairs.append((a, b))
    assert len(pairs) >= 10_000
    for a, b in pairs:
        assert edit_distance(a, b) == recursive_edit_distance(a, b)
    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"took {elapsed:.1f}s"


@acceptance
def test_posterior_algebra():
    """Normalization, uniform-prior argmax, and log/linear agreement."""
    rng = np.random.default_rng(99)
    v = 100
    uniform = np.full(v, 1.0 / v)
    for _ in range(1000):
        prior = rng.dirichlet(np.full(v, 0.3))
        distances = rng.integers(0, 7, size=v)
        beta = rng.uniform(1.0, 6.0)
        weights = np.exp(-beta * distances)

        post = posterior(prior, weights)
        assert abs(post.sum() - 1.0) <= 1e-9

        flat_post = posterior(uniform, weights)
        min_distance = distances.min()
        assert distances[int(np.argmax(flat_post))] == min_distance

        expected = linear_posterior(prior, weights)
        assert np.all(np.isfinite(expected))
        assert np.max(np.abs(post - np.array(expected))) <= 1e-9


@acceptance
def test_entropy_kl_identities():
    """H(uniform_n) = log2 n exactly; KL to uniform = log2|V| - H within 1e-9."""
    for n in itertools.chain(range(1, 513), (1000, 4096, 7904)):
        assert entropy(np.full(n, 1.0 / n)) == math.log2(n)
    rng = np.random.default_rng(3)
    v = 100
    uniform = np.full(v, 1.0 / v)
    for _ in range(1000):
        p = rng.dirichlet(np.full(v, rng.uniform(0.05, 2.0)))
        lhs = kl_divergence(p, uniform)
        rhs = math.log2(v) - entropy(p)
        assert abs(lhs - rhs) <= 1e-9


@acceptance
def test_roc_correctness():
    """Trapezoid AUC equals the pairwise Mann-Whitney statistic."""
    rng = np.random.default_rng(17)
    for trial in range(200):
        n_s = int(rng.integers(1, 51))
        n_f = int(rng.integers(1, 51))
        if trial % 2:  # heavy ties
            succ = rng.integers(0, 5, size=n_s).astype(float)
            fail = rng.integers(0, 5, size=n_f).astype(float)
        else:
            succ = rng.normal(size=n_s)
            fail = rng.normal(size=n_f) + 0.5
        curve = roc_failures(succ, fail)
        assert abs(curve.auc - pairwise_auc(succ, fail)) <= 1e-9
    constant = roc_failures([1.5] * 9, [1.5] * 4)
    assert constant.auc == pytest.approx(0.5, abs=1e-12)
    assert list(constant.points) == [(0.0, 0.0), (1.0, 1.0)]  # the chance diagonal


@acceptance
def test_context_invariance():
    """Uniform and unigram posteriors ignore context: entropies are equal."""
    vocab = CandidateVocab.from_entries([
        ("read", PhonemeSeq(["ɹ", "i", "d"]), 1),
        ("see", PhonemeSeq(["s", "i"]), 1),
        ("weed", PhonemeSeq(["w", "i", "d"]), 1),
        ("want", PhonemeSeq(["w", "ɑ", "n", "t"]), 1),
    ])
    contexts = [
        make_context(masked_gloss=("read",), mask_index=0),
        make_context(masked_gloss=("you", "want", "to", "read"), mask_index=3),
    ]
    models = [UniformPrior(),
              UnigramPrior.from_counts({"read": 9, "see": 3, "want": 2})]
    for observed in (["w", "i", "d"], ["s", "i"], ["f", "ɛ", "t"]):
        seq = PhonemeSeq(observed)
        for model in models:
            entropies = {
                score_token(
                    make_token(seq, None, token_id=f"c{i}", context=ctx),
                    model, vocab, 3.2,
                ).posterior_entropy_bits
                for i, ctx in enumerate(contexts)
            }
            assert len(entropies) == 1  # exact float equality across contexts


@acceptance
def test_model_ordering():
    """Contextual n-gram < unigram < uniform surprisal, overall and per bin."""
    start = time.monotonic()
    rng = np.random.default_rng(42)
    alphabet = "abcdef"
    vocab = random_vocab(30, alphabet, rng)
    process = BigramProcess(30, rng)
    sampler = CorruptionSampler(vocab, alphabet, beta_star=2.5, max_len=4)
    utterances, tokens = bigram_corpus_and_tokens(vocab, process, sampler, 2000, rng)
    assert len(tokens) == 2000

    models = {
        "ngram": NgramPrior(order=2, window="one_utt").fit(utterances),
        "unigram": UnigramPrior().fit(utterances),
        "uniform": UniformPrior(),
    }
    cache = DistanceCache(vocab)
    results = {
        name: [score_token(t, model, vocab, 3.2, cache=cache) for t in tokens]
        for name, model in models.items()
    }
    mean_prior = {
        name: float(np.mean([r.prior_surprisal_bits for r in rows]))
        for name, rows in results.items()
    }
    assert mean_prior["ngram"] < mean_prior["unigram"] < mean_prior["uniform"]

    def bin_of(result):
        return min(result.edit_distance_to_gloss, 3)

    occupied = Counter(bin_of(r) for r in results["uniform"])
    assert set(occupied) == {0, 1, 2, 3} and min(occupied.values()) >= 20
    for b in sorted(occupied):
        per_bin = {
            name: float(np.mean([
                r.posterior_surprisal_bits for r in rows if bin_of(r) == b]))
            for name, rows in results.items()
        }
        assert per_bin["ngram"] < per_bin["unigram"] < per_bin["uniform"], \
            f"bin {b}: {per_bin}"
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"took {elapsed:.1f}s"


@acceptance
def test_end_to_end_determinism():
    """Identical inputs and seed reproduce byte-identical outputs."""
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        cfg = RunConfig(
            corpus=str(fixture_corpus_path()),
            lexicon=str(fixture_lexicon_path()),
            out_dir=tmp, prior="unigram", min_count=1, w=2, seed=7,
            calibrate=True, sample_size=5,
        )
        names = ("scores.csv", "vocab.tsv", "roc.csv", "infogain.csv",
                 "calibration.csv", "surprisal_by_distance.csv")
        from pathlib import Path
        run_pipeline(cfg)
        first = {n: (Path(tmp) / n).read_bytes() for n in names}
        manifest_a = json.loads((Path(tmp) / "manifest.json").read_text())
        run_pipeline(cfg)
        for n in names:
            assert (Path(tmp) / n).read_bytes() == first[n], n
        manifest_b = json.loads((Path(tmp) / "manifest.json").read_text())
        manifest_a.pop("created_utc")
        manifest_b.pop("created_utc")
        assert manifest_a == manifest_b
