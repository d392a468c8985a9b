"""IPA tokenization, pronunciation lexicon parsing, and phoneme edit distance.

A phoneme is one IPA segment: a base character together with any attached
combining diacritics, tie bars, length marks, and superscript modifiers,
normalized to NFC. Distances are computed over phoneme tokens, never over
raw code points, so affricates and diphthongs count as single segments.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import EmptySequenceError, LexiconFormatError

log = logging.getLogger(__name__)

# Stress marks and syllable separators carry no segmental content.
STRESS_MARKS = frozenset({"ˈ", "ˌ"})  # ˈ ˌ
SYLLABLE_SEPARATORS = frozenset({"."})
TIE_BARS = frozenset({"͡", "͜"})  # combining double breve above/below
LENGTH_MARKS = frozenset({"ː", "ˑ"})  # ː ˑ

_COMBINING_CATEGORIES = ("Mn", "Mc", "Me")

LEXICON_HEADER = ("word", "ipa", "syllables")

#: Alias documenting intent: a phoneme is a non-empty NFC string with no
#: whitespace.
Phoneme = str


def _load_fold_table() -> dict[str, str]:
    table: dict[str, str] = {}
    text = resources.files("mishear").joinpath("data/ipa_folds.tsv").read_text("utf-8")
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        src, dst = line.split("\t")
        table[src] = unicodedata.normalize("NFC", dst)
    return table


_FOLDS = _load_fold_table()


class PhonemeSeq(tuple):
    """An immutable sequence of phoneme tokens.

    Subclasses tuple so sequences are hashable (distance caches key on
    them) and support slicing and equality for free. Segments are NFC
    normalized on construction; empty or whitespace-bearing segments are
    rejected.
    """

    __slots__ = ()

    def __new__(cls, segments: Iterable[str]) -> "PhonemeSeq":
        cleaned = []
        for seg in segments:
            seg = unicodedata.normalize("NFC", seg)
            if not seg or any(ch.isspace() for ch in seg):
                raise ValueError(f"invalid phoneme segment: {seg!r}")
            cleaned.append(seg)
        return super().__new__(cls, cleaned)

    def __repr__(self) -> str:
        return "/{}/".format(" ".join(self))


def _is_modifier(ch: str) -> bool:
    # Superscript modifier letters (aspiration, labialization, ...) attach to
    # the preceding base; stress marks live in the same block and are
    # handled before this test.
    return "ʰ" <= ch <= "˿" and ch not in STRESS_MARKS


def _segment_greedy(text: str) -> list[str]:
    segments: list[str] = []
    tie_pending = False
    for ch in text:
        if ch in STRESS_MARKS or ch in SYLLABLE_SEPARATORS:
            tie_pending = False
            continue
        if ch in TIE_BARS:
            if segments:
                segments[-1] += ch
                tie_pending = True
            continue
        attaches = (
            unicodedata.category(ch) in _COMBINING_CATEGORIES
            or ch in LENGTH_MARKS
            or _is_modifier(ch)
        )
        if segments and (attaches or tie_pending):
            segments[-1] += ch
        else:
            segments.append(ch)
        tie_pending = False
    return segments


def _strip_marks(chunk: str) -> str:
    return "".join(
        ch for ch in chunk if ch not in STRESS_MARKS and ch not in SYLLABLE_SEPARATORS
    )


def _fold(text: str) -> str:
    return "".join(_FOLDS.get(ch, ch) for ch in text)


def parse_segments(chunks: Iterable[str]) -> PhonemeSeq:
    """Build a PhonemeSeq from pre-segmented tokens.

    Stress marks and syllable dots are stripped; chunks that strip to
    nothing are dropped. May return an empty sequence; callers that need
    content must check.
    """
    folded = (_fold(unicodedata.normalize("NFC", c)) for c in chunks)
    return PhonemeSeq(s for s in (_strip_marks(c) for c in folded) if s)


def tokenize_ipa(raw: str) -> PhonemeSeq:
    """Tokenize an IPA string into a PhonemeSeq.

    Whitespace-delimited input is treated as pre-segmented: each chunk is
    one phoneme. Otherwise segmentation is greedy by base character, with
    combining diacritics, tie bars (plus the tied base), length marks and
    superscript modifiers attaching to the preceding base. Stress marks and
    syllable dots are stripped in both modes.

    Raises EmptySequenceError when nothing remains after stripping.
    """
    text = _fold(unicodedata.normalize("NFC", raw)).strip()
    if any(ch.isspace() for ch in text):
        segments = list(parse_segments(text.split()))
    else:
        segments = _segment_greedy(text)
    if not segments:
        raise EmptySequenceError(f"no phoneme segments in {raw!r}")
    return PhonemeSeq(segments)


@dataclass(frozen=True)
class PronunciationEntry:
    word: str
    citation: PhonemeSeq
    syllables: int


@dataclass(frozen=True)
class PronunciationLexicon:
    """Word to citation-form mapping with ingestion counters."""

    entries: Mapping[str, PronunciationEntry]
    skipped: int = 0
    duplicates: int = 0

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def get(self, word: str) -> PronunciationEntry | None:
        return self.entries.get(word)

    def __getitem__(self, word: str) -> PronunciationEntry:
        return self.entries[word]

    @property
    def words(self) -> set[str]:
        return set(self.entries)


def load_lexicon(path: str | Path) -> PronunciationLexicon:
    """Parse a lexicon TSV (header ``word<TAB>ipa<TAB>syllables``).

    The ipa column holds space-separated phoneme tokens. Malformed lines are
    skipped and counted; duplicate words keep the first occurrence.
    """
    path = Path(path)
    entries: dict[str, PronunciationEntry] = {}
    skipped = 0
    duplicates = 0
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        if tuple(header.rstrip("\n").split("\t")) != LEXICON_HEADER:
            expected = "\t".join(LEXICON_HEADER)
            raise LexiconFormatError(
                f"{path}: expected header {expected!r}, got {header!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                skipped += 1
                log.warning("%s:%d: expected 3 fields, got %d", path, lineno, len(fields))
                continue
            word_raw, ipa, syll_raw = fields
            word = word_raw.strip().lower()
            try:
                syllables = int(syll_raw)
                if not word or syllables < 1:
                    raise ValueError
                citation = parse_segments(ipa.split())
                if len(citation) == 0:
                    raise ValueError
            except (ValueError, EmptySequenceError):
                skipped += 1
                log.warning("%s:%d: malformed entry %r", path, lineno, line)
                continue
            if word in entries:
                duplicates += 1
                log.warning("%s:%d: duplicate word %r, keeping first", path, lineno, word)
                continue
            entries[word] = PronunciationEntry(word, citation, syllables)
    return PronunciationLexicon(entries, skipped=skipped, duplicates=duplicates)


def edit_distance(a: PhonemeSeq, b: PhonemeSeq) -> int:
    """Unit-cost Levenshtein distance over phoneme tokens."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("edit_distance requires non-empty sequences")
    if len(a) < len(b):  # keep the inner row short
        a, b = b, a
    m = len(b)
    prev = list(range(m + 1))
    for i, seg_a in enumerate(a, start=1):
        cur = [i] + [0] * m
        for j, seg_b in enumerate(b, start=1):
            cost = 0 if seg_a == seg_b else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[m]
