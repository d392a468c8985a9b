"""Candidate vocabulary construction.

The inventory is the intersection of lexicon words with one or two
syllables, the prior model's token whitelist, and words glossed often
enough in the corpus. Ordering is lexicographic so probability vectors are
comparable across runs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .corpus import SENTINELS, Speaker, Utterance, normalize_gloss
from .errors import EmptyVocabError, WordNotInVocabError
from .phonology import PhonemeSeq, PronunciationLexicon


def count_glosses(corpus: Sequence[Utterance], speakers: str = "all") -> Counter:
    """Token counts of normalized gloss words.

    ``speakers`` is "all" (default, pooling every speaker) or "child".
    Sentinel tokens and tokens that normalize to the empty string are not
    counted.
    """
    if speakers not in ("all", "child"):
        raise ValueError(f"speakers must be 'all' or 'child', got {speakers!r}")
    counts: Counter = Counter()
    for utt in corpus:
        if speakers == "child" and utt.speaker is not Speaker.CHILD:
            continue
        for token in utt.gloss_tokens:
            word = normalize_gloss(token)
            if word and word not in SENTINELS:
                counts[word] += 1
    return counts


@dataclass(frozen=True)
class CandidateVocab:
    """The candidate inventory V, lexicographically ordered.

    ``counts`` holds the corpus gloss counts used at construction time
    (kept for the audit TSV); synthetic vocabularies may omit them.
    """

    words: tuple[str, ...]
    citations: tuple[PhonemeSeq, ...]
    syllables: tuple[int, ...]
    counts: tuple[int, ...] | None = None
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.words:
            raise EmptyVocabError("candidate vocabulary is empty")
        if list(self.words) != sorted(set(self.words)):
            raise ValueError("vocabulary words must be unique and sorted")
        for cite, syll in zip(self.citations, self.syllables):
            if len(cite) == 0:
                raise ValueError("empty citation form")
            if syll not in (1, 2):
                raise ValueError(f"syllables must be 1 or 2, got {syll}")
        self._index.update({w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise WordNotInVocabError(word) from None

    def get_index(self, word: str) -> int | None:
        return self._index.get(word)

    def citation(self, word: str) -> PhonemeSeq:
        return self.citations[self.index(word)]

    @classmethod
    def from_entries(
        cls, entries: Iterable[tuple[str, PhonemeSeq, int]],
        counts: dict | None = None,
    ) -> "CandidateVocab":
        ordered = sorted(entries, key=lambda e: e[0])
        words = tuple(e[0] for e in ordered)
        citations = tuple(e[1] for e in ordered)
        syllables = tuple(e[2] for e in ordered)
        tallies = None
        if counts is not None:
            tallies = tuple(int(counts.get(w, 0)) for w in words)
        return cls(words, citations, syllables, tallies)


def build_vocab(
    lexicon: PronunciationLexicon,
    corpus: Sequence[Utterance],
    prior_vocab: Iterable[str],
    min_count: int = 3,
    count_speakers: str = "all",
) -> CandidateVocab:
    """Intersect lexicon (1-2 syllables), prior whitelist, and corpus counts."""
    prior_vocab = set(prior_vocab)
    counts = count_glosses(corpus, speakers=count_speakers)
    selected = [
        (word, entry.citation, entry.syllables)
        for word, entry in lexicon.entries.items()
        if entry.syllables in (1, 2)
        and word in prior_vocab
        and counts[word] >= min_count
    ]
    if not selected:
        raise EmptyVocabError(
            f"no words survive the intersection (min_count={min_count})"
        )
    return CandidateVocab.from_entries(selected, counts=counts)
