import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_runtest_logreport(report):
    """One visible line per acceptance criterion."""
    if report.when != "call" or "acceptance" not in getattr(report, "keywords", {}):
        return
    status = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    print(f"\n[ACCEPTANCE] {name}: {status}", file=sys.stderr)

from mishear.phonology import PhonemeSeq
from mishear.vocabulary import CandidateVocab


@pytest.fixture
def abc_vocab() -> CandidateVocab:
    """Three words with single-segment distinctions."""
    return CandidateVocab.from_entries([
        ("bat", PhonemeSeq(["b", "æ", "t"]), 1),
        ("cat", PhonemeSeq(["k", "æ", "t"]), 1),
        ("cap", PhonemeSeq(["k", "æ", "p"]), 1),
    ])


@pytest.fixture
def fixture_paths():
    from mishear.fixtures import fixture_corpus_path, fixture_lexicon_path
    return fixture_corpus_path(), fixture_lexicon_path()
