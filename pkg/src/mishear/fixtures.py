"""Paths to the bundled toy fixture used by tests and quickstart examples."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def fixture_corpus_path() -> Path:
    return Path(str(resources.files("mishear").joinpath("data/fixture/corpus.jsonl")))


def fixture_lexicon_path() -> Path:
    return Path(str(resources.files("mishear").joinpath("data/fixture/lexicon.tsv")))
