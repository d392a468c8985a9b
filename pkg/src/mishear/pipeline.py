"""End-to-end run orchestration: ingest, select, build, calibrate, score, report.

Every run emits a manifest capturing the configuration, input hashes, the
seed, and token accounting, so identical inputs and seed reproduce
byte-identical CSVs.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import (
    DEFAULT_AGE_BIN_MONTHS,
    bin_gains_by_age,
    roc_failures,
    surprisal_report,
)
from .corpus import ProductionToken, TokenKind, load_corpus, select_tokens
from .errors import (
    ConfigError,
    EmptyClassError,
    MishearError,
    ProtocolViolationError,
    WordNotInVocabError,
)
from .likelihood import (
    DEFAULT_BETA,
    DEFAULT_GRID,
    DistanceCache,
    LikelihoodConfig,
    calibration_curve,
    likelihood_vector,
)
from .phonology import load_lexicon
from .posterior import PosteriorResult, entropy, posterior, surprisal, _top_k
from .priors import ExternalPrior, NgramPrior, UniformPrior, UnigramPrior
from .vocabulary import build_vocab

log = logging.getLogger(__name__)

PRIOR_KINDS = ("uniform", "unigram", "ngram", "external")

SCORE_COLUMNS_PREFIX = (
    "token_id", "kind", "age_months", "edit_distance",
    "prior_surprisal", "posterior_surprisal", "posterior_entropy",
)
SCORE_COLUMNS_SUFFIX = ("prior_gain", "data_gain", "posterior_gain")

REASON_GLOSS_NOT_IN_VOCAB = "gloss_not_in_vocab"
REASON_PROVIDER_VIOLATION = "provider_protocol_violation"

ENDPOINT_ENV_VAR = "MISHEAR_PRIOR_ENDPOINT"


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; serialized verbatim into the manifest."""

    corpus: str
    lexicon: str
    out_dir: str
    prior: str = "uniform"
    prior_vocab: str | None = None
    min_count: int = 3
    w: int = 20
    beta: float = DEFAULT_BETA
    calibrate: bool = False
    grid_lo: float = DEFAULT_GRID[0]
    grid_hi: float = DEFAULT_GRID[1]
    grid_step: float = DEFAULT_GRID[2]
    sample_size: int = 1000
    seed: int = 0
    ngram_order: int = 3
    ngram_window: str = "context"
    pseudocount: float = 0.001
    backoff: float = 0.4
    endpoint: str | None = None
    bin_width_months: int = DEFAULT_AGE_BIN_MONTHS
    top_k: int = 5
    include_vowelless: bool = False
    workers: int = 1
    count_speakers: str = "all"

    def __post_init__(self):
        if self.prior not in PRIOR_KINDS:
            raise ConfigError(f"prior must be one of {PRIOR_KINDS}, got {self.prior!r}")
        if self.w < 0:
            raise ConfigError("window size w must be >= 0")
        if self.count_speakers not in ("all", "child"):
            raise ConfigError("count_speakers must be 'all' or 'child'")
        if self.prior == "external" and not self.effective_endpoint():
            raise ConfigError("external prior requires --endpoint or "
                              f"{ENDPOINT_ENV_VAR}")

    def effective_endpoint(self) -> str | None:
        return os.environ.get(ENDPOINT_ENV_VAR) or self.endpoint


@dataclass
class RunManifest:
    config: dict
    tool_version: str
    created_utc: str
    input_hashes: dict
    vocab_size: int
    beta_used: float
    counts: dict
    outputs: list[str] = field(default_factory=list)
    auc: float | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@contextmanager
def _stage(name: str):
    """Prefix errors with the pipeline stage that raised them."""
    try:
        yield
    except MishearError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except OSError as exc:
        raise OSError(f"[{name}] {exc}") from exc


def _fmt(value) -> str:
    """Stable CSV cell formatting; empty string for missing values.

    Floats use the shortest round-trip representation so downstream
    subcommands reading the CSV reconstruct bit-identical values.
    """
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def make_prior_model(cfg: RunConfig):
    if cfg.prior == "uniform":
        return UniformPrior()
    if cfg.prior == "unigram":
        return UnigramPrior(pseudocount=cfg.pseudocount)
    if cfg.prior == "ngram":
        return NgramPrior(order=cfg.ngram_order, backoff=cfg.backoff,
                          pseudocount=cfg.pseudocount, window=cfg.ngram_window)
    return ExternalPrior(endpoint=cfg.effective_endpoint())


def load_prior_vocab(path: str | None, lexicon) -> set[str]:
    """Whitelist of tokens the prior model can emit; defaults to the lexicon."""
    if path is None:
        return set(lexicon.entries)
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
    return words


@dataclass
class ScoredToken:
    """One token scored under the three reporting conditions."""

    result: PosteriorResult           # fitted prior x likelihood
    prior_entropy_bits: float         # fitted prior alone
    data_entropy_bits: float          # likelihood under a uniform prior


def _score_one(token, prior_model, vocab, beta, cache, top_k):
    """Score one token, or return the reason it cannot be scored."""
    try:
        prior = prior_model.prior(vocab, context=token.context, request_id=token.id)
    except ProtocolViolationError as exc:
        log.warning("token %s: provider violation: %s", token.id, exc)
        return None, REASON_PROVIDER_VIOLATION
    lik = likelihood_vector(token.observed, vocab, beta, cache=cache)
    prior_bits = post_bits = None
    dist_to_gloss = None
    if token.kind is TokenKind.SUCCESS:
        try:
            idx = vocab.index(token.gloss)
        except WordNotInVocabError:
            log.info("token %s: gloss %r not in V", token.id, token.gloss)
            return None, REASON_GLOSS_NOT_IN_VOCAB
        prior_bits = surprisal(prior, token.gloss, vocab)
        dist_to_gloss = int(lik.distances[idx])
    post = posterior(prior, lik)
    if token.kind is TokenKind.SUCCESS:
        post_bits = surprisal(post, token.gloss, vocab)
    data_post = lik.weights / lik.weights.sum()
    return ScoredToken(
        result=PosteriorResult(
            token_id=token.id,
            kind=token.kind,
            posterior=post,
            posterior_entropy_bits=entropy(post),
            prior_surprisal_bits=prior_bits,
            posterior_surprisal_bits=post_bits,
            edit_distance_to_gloss=dist_to_gloss,
            top_k=_top_k(post, vocab, top_k),
            age_months=token.age_months,
        ),
        prior_entropy_bits=entropy(prior),
        data_entropy_bits=entropy(data_post),
    ), None


def score_all(
    tokens: Sequence[ProductionToken],
    prior_model,
    vocab,
    beta: float,
    *,
    top_k: int = 5,
    cache: DistanceCache | None = None,
    workers: int = 1,
) -> tuple[list[ScoredToken], Counter]:
    """Score tokens, skipping (and counting) per-token contract failures.

    Provider protocol violations and successes whose gloss fell out of V
    are skipped with a reason; an unreachable provider propagates, since
    nothing later in the run could succeed. ``workers`` > 1 scores through
    a bounded thread pool (useful when the prior is a remote provider);
    results keep token order either way.
    """
    cache = cache or DistanceCache(vocab)
    skipped: Counter = Counter()
    scored: list[ScoredToken] = []
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(
                lambda t: _score_one(t, prior_model, vocab, beta, cache, top_k),
                tokens,
            ))
    else:
        outcomes = (_score_one(t, prior_model, vocab, beta, cache, top_k)
                    for t in tokens)
    for item, reason in outcomes:
        if item is None:
            skipped[reason] += 1
        else:
            scored.append(item)
    return scored, skipped


def write_scores_csv(path: Path, scored: Sequence[ScoredToken], vocab_size: int,
                     top_k: int = 5) -> None:
    log_v = math.log2(vocab_size)
    header = list(SCORE_COLUMNS_PREFIX)
    for i in range(1, top_k + 1):
        header += [f"top{i}", f"top{i}_prob"]
    header += list(SCORE_COLUMNS_SUFFIX)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for item in scored:
            r = item.result
            row = [
                r.token_id,
                r.kind.value,
                _fmt(r.age_months),
                _fmt(r.edit_distance_to_gloss),
                _fmt(r.prior_surprisal_bits),
                _fmt(r.posterior_surprisal_bits),
                _fmt(r.posterior_entropy_bits),
            ]
            tops = list(r.top_k)[:top_k]
            tops += [("", None)] * (top_k - len(tops))
            for word, prob in tops:
                row += [word, _fmt(prob)]
            row += [
                _fmt(log_v - item.prior_entropy_bits),
                _fmt(log_v - item.data_entropy_bits),
                _fmt(log_v - r.posterior_entropy_bits),
            ]
            writer.writerow(row)


def write_vocab_tsv(path: Path, vocab) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("word\tipa\tsyllables\tcount\n")
        counts = vocab.counts or (0,) * len(vocab)
        for word, cite, syll, count in zip(vocab.words, vocab.citations,
                                           vocab.syllables, counts):
            fh.write(f"{word}\t{' '.join(cite)}\t{syll}\t{count}\n")


def write_roc_csv(path: Path, curve) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "fpr", "tpr"])
        for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points):
            writer.writerow([_fmt(float(threshold)), _fmt(fpr), _fmt(tpr)])


def write_infogain_csv(path: Path, records) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["age_bin_lo", "age_bin_hi", "condition", "mean_bits", "n"])
        for rec in records:
            for condition, value in (
                ("prior", rec.gain_prior_bits),
                ("data", rec.gain_data_bits),
                ("both", rec.gain_both_bits),
            ):
                writer.writerow([
                    _fmt(rec.age_lo_months), _fmt(rec.age_hi_months),
                    condition, _fmt(value), rec.n_tokens,
                ])


def write_surprisal_by_distance_csv(path: Path, report) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "distance_bin", "mean_posterior_surprisal", "sem", "n"])
        for stat in report.by_distance:
            writer.writerow([stat.model, stat.bin_label, _fmt(stat.mean_bits),
                             _fmt(stat.sem_bits), stat.n])


def write_calibration_csv(path: Path, curve: Sequence[tuple[float, float]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["beta", "mean_posterior_prob"])
        for beta, value in curve:
            writer.writerow([_fmt(beta), _fmt(value)])


def run_pipeline(cfg: RunConfig, analyses: bool = True) -> RunManifest:
    """Execute the pipeline and write outputs plus a manifest.

    With ``analyses=False`` (the `score` subcommand) the run stops after
    scores.csv; `run` additionally emits the ROC, information-gain, and
    surprisal summaries.
    """
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with _stage("ingest"):
        loaded = load_corpus(cfg.corpus)
        lexicon = load_lexicon(cfg.lexicon)
        prior_vocab = load_prior_vocab(cfg.prior_vocab, lexicon)
    with _stage("build-vocab"):
        vocab = build_vocab(lexicon, loaded.utterances, prior_vocab,
                            min_count=cfg.min_count,
                            count_speakers=cfg.count_speakers)
    with _stage("fit-prior"):
        prior_model = make_prior_model(cfg)
        prior_model.fit(loaded.utterances)
    with _stage("select"):
        selection = select_tokens(
            loaded.utterances, lexicon, prior_vocab, cfg.w,
            include_vowelless=cfg.include_vowelless,
        )
    cache = DistanceCache(vocab)

    beta_used = float(cfg.beta)
    outputs: list[str] = []
    if cfg.calibrate:
        with _stage("calibrate"):
            grid = LikelihoodConfig(beta=cfg.beta, grid_lo=cfg.grid_lo,
                                    grid_hi=cfg.grid_hi,
                                    grid_step=cfg.grid_step).grid()
            calibratable = [
                t for t in selection.successes
                if vocab.get_index(t.gloss) is not None
            ]
            curve = calibration_curve(
                calibratable,
                lambda t: prior_model.prior(vocab, context=t.context,
                                            request_id=t.id),
                vocab, grid, sample_size=cfg.sample_size, seed=cfg.seed,
                cache=cache,
            )
            best = curve[0]
            for point in curve[1:]:
                if point[1] > best[1]:
                    best = point
            beta_used = best[0]
            write_calibration_csv(out_dir / "calibration.csv", curve)
            outputs.append("calibration.csv")

    with _stage("score"):
        scored, skipped = score_all(
            selection.tokens, prior_model, vocab, beta_used,
            top_k=cfg.top_k, cache=cache, workers=cfg.workers,
        )

    write_vocab_tsv(out_dir / "vocab.tsv", vocab)
    outputs.append("vocab.tsv")
    write_scores_csv(out_dir / "scores.csv", scored, len(vocab), top_k=cfg.top_k)
    outputs.append("scores.csv")

    results = [s.result for s in scored]
    auc = None
    if analyses:
        with _stage("classify"):
            succ_entropy = [r.posterior_entropy_bits for r in results
                            if r.kind is TokenKind.SUCCESS]
            fail_entropy = [r.posterior_entropy_bits for r in results
                            if r.kind is TokenKind.FAILURE]
            try:
                curve = roc_failures(succ_entropy, fail_entropy)
                write_roc_csv(out_dir / "roc.csv", curve)
                outputs.append("roc.csv")
                auc = curve.auc
            except EmptyClassError:
                log.info("skipping ROC: need both successes and failures")

        with _stage("infogain"):
            log_v = math.log2(len(vocab))
            gain_result = bin_gains_by_age(
                [s.result.age_months for s in scored],
                {
                    "prior": [log_v - s.prior_entropy_bits for s in scored],
                    "data": [log_v - s.data_entropy_bits for s in scored],
                    "both": [log_v - s.result.posterior_entropy_bits
                             for s in scored],
                },
                cfg.bin_width_months,
            ) if scored else None
            if gain_result is not None and gain_result.records:
                write_infogain_csv(out_dir / "infogain.csv", gain_result.records)
                outputs.append("infogain.csv")

        with _stage("report"):
            report = surprisal_report({cfg.prior: results}) if results else None
            if report is not None and report.by_distance:
                write_surprisal_by_distance_csv(
                    out_dir / "surprisal_by_distance.csv", report)
                outputs.append("surprisal_by_distance.csv")

    exclusions = dict(sorted(Counter(selection.exclusions).items()))
    for reason, count in sorted(skipped.items()):
        exclusions[reason] = exclusions.get(reason, 0) + count

    input_hashes = {"corpus": _sha256(cfg.corpus), "lexicon": _sha256(cfg.lexicon)}
    if cfg.prior_vocab:
        input_hashes["prior_vocab"] = _sha256(cfg.prior_vocab)

    manifest = RunManifest(
        config=dataclasses.asdict(cfg),
        tool_version=__version__,
        created_utc=datetime.now(timezone.utc).isoformat(),
        input_hashes=input_hashes,
        vocab_size=len(vocab),
        beta_used=beta_used,
        counts={
            "utterances": len(loaded.utterances),
            "skipped_corpus_lines": loaded.skipped_lines,
            "lexicon_entries": len(lexicon),
            "lexicon_skipped": lexicon.skipped,
            "lexicon_duplicates": lexicon.duplicates,
            "successes": len(selection.successes),
            "failures": len(selection.failures),
            "scored": len(scored),
            "exclusions": exclusions,
        },
        outputs=sorted(outputs),
        auc=auc,
    )
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(manifest.to_json() + "\n", encoding="utf-8")
    tmp.replace(out_dir / "manifest.json")
    return manifest
