"""Command-line interface.

Subcommands mirror the pipeline stages so each analysis is independently
invocable: ingest, build-vocab, calibrate, score, classify, infogain,
report, run. Exit codes: 0 success, 2 configuration error, 3 data error,
4 provider error.
"""

from __future__ import annotations

import csv
import functools
import logging
import sys
from pathlib import Path

import click

from . import __version__
from .analysis import bin_gains_by_age, roc_failures, surprisal_report
from .corpus import TokenKind, load_corpus, select_tokens
from .errors import ConfigError, DataError, MishearError, ProviderError
from .likelihood import LikelihoodConfig, calibration_curve
from .phonology import load_lexicon
from .pipeline import (
    RunConfig,
    RunManifest,
    load_prior_vocab,
    make_prior_model,
    run_pipeline,
    write_calibration_csv,
    write_infogain_csv,
    write_roc_csv,
    write_surprisal_by_distance_csv,
    write_vocab_tsv,
    _fmt,
)
from .posterior import PosteriorResult
from .vocabulary import build_vocab

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PROVIDER = 4


def _translate_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ProviderError as exc:
            click.echo(f"provider error: {exc}", err=True)
            sys.exit(EXIT_PROVIDER)
        except (DataError, OSError) as exc:
            click.echo(f"data error: {exc}", err=True)
            sys.exit(EXIT_DATA)
        except (ConfigError, ValueError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except MishearError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)
    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="mishear")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """Bayesian recovery of intended words from noisy child productions."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


corpus_option = click.option("--corpus", required=True,
                             type=click.Path(exists=False), help="Corpus JSON-lines file.")
lexicon_option = click.option("--lexicon", required=True,
                              type=click.Path(exists=False), help="Lexicon TSV file.")
prior_vocab_option = click.option("--prior-vocab", default=None,
                                  type=click.Path(exists=False),
                                  help="Whitelist file, one token per line "
                                       "(default: all lexicon words).")


def _prior_options(fn):
    decorators = [
        click.option("--prior", default="uniform",
                     type=click.Choice(["uniform", "unigram", "ngram", "external"]),
                     help="Prior model."),
        click.option("--ngram-order", default=3, show_default=True, type=int),
        click.option("--ngram-window", default="context", show_default=True,
                     type=click.Choice(["one_utt", "context"])),
        click.option("--pseudocount", default=0.001, show_default=True, type=float),
        click.option("--backoff", default=0.4, show_default=True, type=float),
        click.option("--endpoint", default=None,
                     help="External provider endpoint (http(s)://... or stdio:CMD); "
                          "MISHEAR_PRIOR_ENDPOINT overrides."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


@main.command()
@corpus_option
@_translate_errors
def ingest(corpus):
    """Validate a corpus file and print ingestion counts."""
    loaded = load_corpus(corpus)
    transcripts = {u.transcript_id for u in loaded.utterances}
    click.echo(f"utterances: {len(loaded.utterances)}")
    click.echo(f"transcripts: {len(transcripts)}")
    click.echo(f"skipped_lines: {loaded.skipped_lines}")


@main.command("build-vocab")
@corpus_option
@lexicon_option
@prior_vocab_option
@click.option("--min-count", default=3, show_default=True, type=int)
@click.option("--count-speakers", default="all", show_default=True,
              type=click.Choice(["all", "child"]))
@click.option("--out", required=True, type=click.Path(), help="Output vocabulary TSV.")
@_translate_errors
def build_vocab_cmd(corpus, lexicon, prior_vocab, min_count, count_speakers, out):
    """Build the candidate vocabulary and write the audit TSV."""
    loaded = load_corpus(corpus)
    lex = load_lexicon(lexicon)
    whitelist = load_prior_vocab(prior_vocab, lex)
    vocab = build_vocab(lex, loaded.utterances, whitelist, min_count=min_count,
                        count_speakers=count_speakers)
    write_vocab_tsv(Path(out), vocab)
    click.echo(f"vocab_size: {len(vocab)}")


@main.command()
@corpus_option
@lexicon_option
@prior_vocab_option
@_prior_options
@click.option("--min-count", default=3, show_default=True, type=int)
@click.option("--w", default=20, show_default=True, type=int,
              help="Context window size in utterances.")
@click.option("--grid", nargs=3, type=float, default=(1.0, 6.0, 0.1),
              show_default=True, help="Calibration grid: lo hi step.")
@click.option("--sample-size", default=1000, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", default=None, type=click.Path(),
              help="Write the objective CSV here instead of stdout.")
@_translate_errors
def calibrate(corpus, lexicon, prior_vocab, prior, ngram_order, ngram_window,
              pseudocount, backoff, endpoint, min_count, w, grid, sample_size,
              seed, out):
    """Grid-search beta and print the objective for every grid point."""
    cfg = RunConfig(
        corpus=corpus, lexicon=lexicon, out_dir=".", prior=prior,
        prior_vocab=prior_vocab, min_count=min_count, w=w,
        grid_lo=grid[0], grid_hi=grid[1], grid_step=grid[2],
        sample_size=sample_size, seed=seed, ngram_order=ngram_order,
        ngram_window=ngram_window, pseudocount=pseudocount, backoff=backoff,
        endpoint=endpoint,
    )
    loaded = load_corpus(cfg.corpus)
    lex = load_lexicon(cfg.lexicon)
    whitelist = load_prior_vocab(cfg.prior_vocab, lex)
    vocab = build_vocab(lex, loaded.utterances, whitelist, min_count=cfg.min_count)
    model = make_prior_model(cfg)
    model.fit(loaded.utterances)
    selection = select_tokens(loaded.utterances, lex, whitelist, cfg.w)
    successes = [t for t in selection.successes if vocab.get_index(t.gloss) is not None]
    curve = calibration_curve(
        successes,
        lambda t: model.prior(vocab, context=t.context, request_id=t.id),
        vocab,
        LikelihoodConfig(grid_lo=cfg.grid_lo, grid_hi=cfg.grid_hi,
                         grid_step=cfg.grid_step).grid(),
        sample_size=cfg.sample_size, seed=cfg.seed,
    )
    if out:
        write_calibration_csv(Path(out), curve)
    else:
        click.echo("beta,mean_posterior_prob")
        for beta, value in curve:
            click.echo(f"{_fmt(beta)},{_fmt(value)}")
    best = max(curve, key=lambda bv: bv[1])
    click.echo(f"# best beta: {_fmt(best[0])}", err=True)


def _run_options(fn):
    decorators = [
        corpus_option, lexicon_option, prior_vocab_option, _prior_options,
        click.option("--min-count", default=3, show_default=True, type=int),
        click.option("--w", default=20, show_default=True, type=int),
        click.option("--beta", default=3.2, show_default=True, type=float),
        click.option("--calibrate", "calibrate_flag", is_flag=True,
                     help="Calibrate beta on successes before scoring."),
        click.option("--sample-size", default=1000, show_default=True, type=int),
        click.option("--seed", default=0, show_default=True, type=int),
        click.option("--bin-width", default=6, show_default=True, type=int,
                     help="Age bin width in months for the infogain report."),
        click.option("--top-k", default=5, show_default=True, type=int),
        click.option("--include-vowelless", is_flag=True,
                     help="Treat vowelless sequences as monosyllabic instead "
                          "of excluding them."),
        click.option("--workers", default=1, show_default=True, type=int,
                     help="Thread pool size for scoring (useful with "
                          "--prior external)."),
        click.option("--count-speakers", default="all", show_default=True,
                     type=click.Choice(["all", "child"]),
                     help="Whose gloss tokens feed the vocabulary count "
                          "threshold."),
        click.option("--out-dir", required=True, type=click.Path()),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _config_from_options(**kw) -> RunConfig:
    return RunConfig(
        corpus=kw["corpus"], lexicon=kw["lexicon"], out_dir=kw["out_dir"],
        prior=kw["prior"], prior_vocab=kw["prior_vocab"],
        min_count=kw["min_count"], w=kw["w"], beta=kw["beta"],
        calibrate=kw["calibrate_flag"], sample_size=kw["sample_size"],
        seed=kw["seed"], ngram_order=kw["ngram_order"],
        ngram_window=kw["ngram_window"], pseudocount=kw["pseudocount"],
        backoff=kw["backoff"], endpoint=kw["endpoint"],
        bin_width_months=kw["bin_width"], top_k=kw["top_k"],
        include_vowelless=kw["include_vowelless"], workers=kw["workers"],
        count_speakers=kw["count_speakers"],
    )


def _echo_manifest_summary(manifest: RunManifest):
    counts = manifest.counts
    click.echo(f"vocab_size: {manifest.vocab_size}")
    click.echo(f"beta: {_fmt(manifest.beta_used)}")
    click.echo(f"successes: {counts['successes']}  failures: {counts['failures']}  "
               f"scored: {counts['scored']}")
    exclusions = counts["exclusions"]
    if exclusions:
        total = sum(exclusions.values())
        detail = ", ".join(f"{k}={v}" for k, v in exclusions.items())
        click.echo(f"excluded: {total} ({detail})")
    if manifest.auc is not None:
        click.echo(f"auc: {_fmt(manifest.auc)}")


@main.command()
@_run_options
@_translate_errors
def score(**kw):
    """Select tokens, score posteriors, and write scores.csv plus manifest."""
    manifest = run_pipeline(_config_from_options(**kw), analyses=False)
    _echo_manifest_summary(manifest)


@main.command()
@_run_options
@_translate_errors
def run(**kw):
    """Run the full pipeline: ingest, select, build, score, analyses."""
    manifest = run_pipeline(_config_from_options(**kw))
    _echo_manifest_summary(manifest)


def _read_scores(path: str) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: no scored tokens")
    return rows


def _maybe_float(cell: str) -> float | None:
    return float(cell) if cell not in ("", None) else None


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(),
              help="scores.csv from a previous run.")
@click.option("--out", required=True, type=click.Path(), help="Output roc.csv.")
@_translate_errors
def classify(scores_path, out):
    """Build the failure-prediction ROC from posterior entropies."""
    rows = _read_scores(scores_path)
    succ = [float(r["posterior_entropy"]) for r in rows if r["kind"] == "success"]
    fail = [float(r["posterior_entropy"]) for r in rows if r["kind"] == "failure"]
    curve = roc_failures(succ, fail)
    write_roc_csv(Path(out), curve)
    click.echo(f"auc: {_fmt(curve.auc)}")


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path())
@click.option("--bin-width", default=6, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(), help="Output infogain.csv.")
@_translate_errors
def infogain(scores_path, bin_width, out):
    """Bin per-token information gains by age."""
    rows = _read_scores(scores_path)
    ages = [_maybe_float(r["age_months"]) for r in rows]
    gains = {
        "prior": [float(r["prior_gain"]) for r in rows],
        "data": [float(r["data_gain"]) for r in rows],
        "both": [float(r["posterior_gain"]) for r in rows],
    }
    result = bin_gains_by_age(ages, gains, bin_width)
    write_infogain_csv(Path(out), result.records)
    click.echo(f"bins: {len(result.records)}  missing_age: {result.n_missing_age}")


@main.command()
@click.option("--scores", "named_scores", multiple=True, required=True,
              help="NAME=PATH pairs, one per model, all over the same tokens.")
@click.option("--out-dir", required=True, type=click.Path())
@_translate_errors
def report(named_scores, out_dir):
    """Cross-model surprisal comparison from per-model scores.csv files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_by_model: dict[str, list[PosteriorResult]] = {}
    for item in named_scores:
        if "=" not in item:
            raise ConfigError(f"--scores expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        rows = _read_scores(path)
        results_by_model[name] = [
            PosteriorResult(
                token_id=r["token_id"],
                kind=TokenKind(r["kind"]),
                posterior=None,
                posterior_entropy_bits=float(r["posterior_entropy"]),
                prior_surprisal_bits=_maybe_float(r["prior_surprisal"]),
                posterior_surprisal_bits=_maybe_float(r["posterior_surprisal"]),
                edit_distance_to_gloss=(
                    int(r["edit_distance"]) if r["edit_distance"] else None
                ),
                age_months=_maybe_float(r["age_months"]),
            )
            for r in rows
        ]
    rep = surprisal_report(results_by_model)
    by_model = out / "surprisal_by_model.csv"
    with by_model.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "mean_prior_surprisal", "sem", "n"])
        for model in rep.models:
            writer.writerow([
                model, _fmt(rep.mean_prior_surprisal[model]),
                _fmt(rep.sem_prior_surprisal[model]), rep.n_successes,
            ])
    write_surprisal_by_distance_csv(out / "surprisal_by_distance.csv", rep)
    for cmp in rep.paired:
        click.echo(
            f"{cmp.model_a} vs {cmp.model_b}: diff={_fmt(cmp.mean_difference_bits)} "
            f"t={_fmt(cmp.t_statistic)} p={_fmt(cmp.p_value)} n={cmp.n}"
        )
    click.echo(f"wrote {by_model} and surprisal_by_distance.csv")


if __name__ == "__main__":
    main()
