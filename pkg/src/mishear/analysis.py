"""Corpus-level analyses over scored tokens.

Three views: surprisal comparison across prior models, prediction of
communicative failures from posterior entropy (ROC), and the decomposition
of information gain over developmental time. Gains are KL divergences from
the uniform baseline, which for a distribution p over V reduce to
log2(|V|) - H(p).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from ._validation import as_float_vector
from .corpus import TokenKind
from .errors import EmptyClassError, SupportViolationError, TokenSetMismatchError
from .posterior import PosteriorResult

log = logging.getLogger(__name__)

DEFAULT_DISTANCE_BINS = (0, 1, 2)  # final bin is "3+"
DEFAULT_AGE_BIN_MONTHS = 6


def kl_divergence(p, q) -> float:
    """KL(p || q) in bits, with 0 log 0 = 0.

    Raises SupportViolationError where q has a zero but p has mass.
    """
    p = as_float_vector(getattr(p, "probs", p), name="p")
    q = as_float_vector(getattr(q, "probs", q), name="q", n=p.shape[0])
    mask = p > 0
    if np.any(q[mask] == 0):
        raise SupportViolationError("q is zero where p has mass")
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


@dataclass(frozen=True)
class RocCurve:
    """ROC of an entropy threshold classifier; failures are positives."""

    thresholds: tuple[float, ...]
    points: tuple[tuple[float, float], ...]  # (fpr, tpr) per threshold
    auc: float


def roc_failures(
    success_entropies: Sequence[float],
    failure_entropies: Sequence[float],
) -> RocCurve:
    """Sweep entropy thresholds; predict Failure when entropy >= threshold.

    Thresholds run from +inf (nothing positive) down through every distinct
    entropy to -inf (everything positive), so the curve starts at (0,0) and
    ends at (1,1). AUC is the trapezoidal integral.
    """
    succ = np.asarray(success_entropies, dtype=float)
    fail = np.asarray(failure_entropies, dtype=float)
    if succ.size == 0 or fail.size == 0:
        raise EmptyClassError("ROC needs at least one entropy in each class")
    candidate_thresholds = [math.inf]
    candidate_thresholds.extend(
        sorted(set(np.concatenate([succ, fail]).tolist()), reverse=True))
    candidate_thresholds.append(-math.inf)
    thresholds: list[float] = []
    points: list[tuple[float, float]] = []
    for t in candidate_thresholds:
        point = (float(np.mean(succ >= t)), float(np.mean(fail >= t)))
        if points and point == points[-1]:
            continue
        thresholds.append(t)
        points.append(point)
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    auc = float(np.trapezoid(ys, xs))
    return RocCurve(tuple(thresholds), tuple(points), auc)


@dataclass(frozen=True)
class PairedComparison:
    """Two-sided paired t on per-token prior surprisal differences."""

    model_a: str
    model_b: str
    mean_difference_bits: float
    t_statistic: float
    p_value: float
    n: int


@dataclass(frozen=True)
class DistanceBinStat:
    model: str
    bin_label: str
    mean_bits: float
    sem_bits: float
    n: int


@dataclass(frozen=True)
class SurprisalReport:
    """Per-model surprisal summaries over a shared success set."""

    models: tuple[str, ...]
    mean_prior_surprisal: Mapping[str, float]
    sem_prior_surprisal: Mapping[str, float]
    n_successes: int
    by_distance: tuple[DistanceBinStat, ...]
    paired: tuple[PairedComparison, ...]


def _bin_label(distance: int, bins: Sequence[int]) -> str:
    last = bins[-1]
    return str(distance) if distance <= last else f"{last + 1}+"


def _bin_labels(bins: Sequence[int]) -> list[str]:
    return [str(b) for b in bins] + [f"{bins[-1] + 1}+"]


def _sem(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def surprisal_report(
    results_by_model: Mapping[str, Sequence[PosteriorResult]],
    bins: Sequence[int] = DEFAULT_DISTANCE_BINS,
) -> SurprisalReport:
    """Aggregate surprisal over successes, per model and per distance bin.

    All models must have scored the identical token sequence; raises
    TokenSetMismatchError otherwise. Means cover only successes whose gloss
    resolved in V (surprisal fields present).
    """
    models = tuple(results_by_model)
    if not models:
        raise ValueError("no models given")
    id_seqs = {
        m: [r.token_id for r in results_by_model[m]] for m in models
    }
    reference = id_seqs[models[0]]
    for m in models[1:]:
        if id_seqs[m] != reference:
            raise TokenSetMismatchError(f"{m} scored a different token set than {models[0]}")

    success_rows = [
        i for i, r in enumerate(results_by_model[models[0]])
        if r.kind is TokenKind.SUCCESS and r.prior_surprisal_bits is not None
    ]
    mean_prior: dict[str, float] = {}
    sem_prior: dict[str, float] = {}
    by_distance: list[DistanceBinStat] = []
    prior_vectors: dict[str, np.ndarray] = {}
    for m in models:
        rows = [results_by_model[m][i] for i in success_rows]
        prior_bits = np.array([r.prior_surprisal_bits for r in rows], dtype=float)
        prior_vectors[m] = prior_bits
        mean_prior[m] = float(prior_bits.mean()) if prior_bits.size else math.nan
        sem_prior[m] = _sem(prior_bits)
        labels = np.array(
            [_bin_label(r.edit_distance_to_gloss, bins) for r in rows]
        ) if rows else np.array([])
        for label in _bin_labels(bins):
            chosen = np.array(
                [r.posterior_surprisal_bits for r, l in zip(rows, labels) if l == label],
                dtype=float,
            )
            if chosen.size == 0:
                continue
            by_distance.append(DistanceBinStat(
                model=m, bin_label=label,
                mean_bits=float(chosen.mean()), sem_bits=_sem(chosen),
                n=int(chosen.size),
            ))

    paired: list[PairedComparison] = []
    for i, a in enumerate(models):
        for b in models[i + 1:]:
            diffs = prior_vectors[a] - prior_vectors[b]
            if diffs.size == 0:
                continue
            if np.all(diffs == diffs[0]):
                # zero variance: identical models report difference 0, a
                # constant offset is infinitely significant
                if diffs[0] == 0.0:
                    t_stat, p_val = 0.0, 1.0
                else:
                    t_stat, p_val = math.copysign(math.inf, diffs[0]), 0.0
            else:
                t_stat, p_val = stats.ttest_rel(prior_vectors[a], prior_vectors[b])
            paired.append(PairedComparison(
                model_a=a, model_b=b,
                mean_difference_bits=float(diffs.mean()),
                t_statistic=float(t_stat), p_value=float(p_val),
                n=int(diffs.size),
            ))
    return SurprisalReport(
        models=models,
        mean_prior_surprisal=mean_prior,
        sem_prior_surprisal=sem_prior,
        n_successes=len(success_rows),
        by_distance=tuple(by_distance),
        paired=tuple(paired),
    )


@dataclass(frozen=True)
class InfoGainRecord:
    """Mean information gains (bits) for one age bin."""

    age_lo_months: float
    age_hi_months: float
    gain_prior_bits: float
    gain_data_bits: float
    gain_both_bits: float
    n_tokens: int


@dataclass
class InfoGainResult:
    records: list[InfoGainRecord]
    n_missing_age: int = 0


def bin_gains_by_age(
    ages: Sequence[float | None],
    gains_by_condition: Mapping[str, Sequence[float]],
    bin_width_months: int = DEFAULT_AGE_BIN_MONTHS,
) -> InfoGainResult:
    """Bin per-token gains into fixed-width age bins.

    ``gains_by_condition`` must hold the keys "prior", "data", "both".
    Tokens with no age are excluded and counted.
    """
    if bin_width_months <= 0:
        raise ValueError("bin_width_months must be positive")
    prior = list(gains_by_condition["prior"])
    data = list(gains_by_condition["data"])
    both = list(gains_by_condition["both"])
    if not (len(ages) == len(prior) == len(data) == len(both)):
        raise ValueError("ages and gain lists must align")
    buckets: dict[float, list[int]] = {}
    missing = 0
    for i, age in enumerate(ages):
        if age is None or (isinstance(age, float) and math.isnan(age)):
            missing += 1
            continue
        lo = math.floor(age / bin_width_months) * bin_width_months
        buckets.setdefault(float(lo), []).append(i)
    records = []
    for lo in sorted(buckets):
        idx = buckets[lo]
        records.append(InfoGainRecord(
            age_lo_months=lo,
            age_hi_months=lo + bin_width_months,
            gain_prior_bits=float(np.mean([prior[i] for i in idx])),
            gain_data_bits=float(np.mean([data[i] for i in idx])),
            gain_both_bits=float(np.mean([both[i] for i in idx])),
            n_tokens=len(idx),
        ))
    return InfoGainResult(records, n_missing_age=missing)


def information_gain_by_age(
    prior_results: Sequence[PosteriorResult],
    data_results: Sequence[PosteriorResult],
    both_results: Sequence[PosteriorResult],
    vocab_size: int,
    bin_width_months: int = DEFAULT_AGE_BIN_MONTHS,
) -> InfoGainResult:
    """Decompose information gain over age from three scoring conditions.

    The conditions are the same tokens scored with the fitted prior alone,
    with the likelihood under a uniform prior, and with both; each gain is
    KL(condition || uniform) = log2(|V|) - entropy.
    """
    ids = [r.token_id for r in prior_results]
    if ids != [r.token_id for r in data_results] or ids != [r.token_id for r in both_results]:
        raise TokenSetMismatchError("the three conditions scored different token sets")
    log_v = math.log2(vocab_size)
    gains = {
        "prior": [log_v - r.posterior_entropy_bits for r in prior_results],
        "data": [log_v - r.posterior_entropy_bits for r in data_results],
        "both": [log_v - r.posterior_entropy_bits for r in both_results],
    }
    ages = [r.age_months for r in prior_results]
    return bin_gains_by_age(ages, gains, bin_width_months)
