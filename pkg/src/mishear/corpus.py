"""Transcript ingestion and selection of communicative successes and failures.

Utterances arrive as JSON lines (see ``CORPUS_FORMAT``). Child tokens that
carry a phonemic transcription are screened into successes (glossed,
monosyllabic, clean utterance, gloss known to lexicon and prior vocabulary)
or failures (glossed as unintelligible-with-phonology, monosyllabic, no
other sentinel in the utterance). Every screened token that does not make
the cut is assigned exactly one exclusion reason.
"""

from __future__ import annotations

import enum
import json
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import NoNucleusError
from .phonology import PhonemeSeq, parse_segments

log = logging.getLogger(__name__)

#: Sentinel glosses: fully unintelligible, and unintelligible-with-phonology.
XXX = "xxx"
YYY = "yyy"
SENTINELS = frozenset({XXX, YYY})

#: Punctuation stripped from gloss edges; internal apostrophes survive so
#: contractions keep their lexicon spelling.
_GLOSS_STRIP = ".,;:!?\"()[]<>«»“”‘’"

CORPUS_FORMAT = (
    '{"transcript_id": str, "utterance_index": int, "speaker": "CHI"|"MOT"|"OTH", '
    '"age_months": number|null, "gloss": [str,...], "phon": [[str,...],...]|null}'
)


class Speaker(enum.Enum):
    CHILD = "CHI"
    CAREGIVER = "MOT"
    OTHER = "OTH"


class TokenKind(enum.Enum):
    SUCCESS = "success"
    FAILURE = "failure"


def normalize_gloss(token: str) -> str:
    """Lowercase and strip clitic punctuation from a gloss token."""
    return unicodedata.normalize("NFC", token).lower().strip(_GLOSS_STRIP)


@dataclass(frozen=True)
class Utterance:
    transcript_id: str
    utterance_index: int
    speaker: Speaker
    gloss_tokens: tuple[str, ...]
    phon_tokens: tuple[PhonemeSeq, ...] | None = None
    age_months: float | None = None

    def has_sentinel(self) -> bool:
        return any(normalize_gloss(t) in SENTINELS for t in self.gloss_tokens)


@dataclass(frozen=True)
class ContextWindow:
    """Discourse context around one masked token.

    ``before`` and ``after`` hold up to W utterances each side, in
    transcript order, never crossing a transcript boundary. The masked
    utterance keeps all of its gloss tokens; only the target position
    (``mask_index``) is treated as unknown.
    """

    before: tuple[Utterance, ...]
    after: tuple[Utterance, ...]
    masked_utterance: Utterance
    mask_index: int


@dataclass(frozen=True)
class ProductionToken:
    """One masked child production selected for scoring."""

    id: str
    observed: PhonemeSeq
    kind: TokenKind
    gloss: str | None
    context: ContextWindow
    age_months: float | None
    transcript_id: str
    utterance_index: int
    token_index: int

    @property
    def is_success(self) -> bool:
        return self.kind is TokenKind.SUCCESS


@dataclass
class LoadedCorpus:
    utterances: list[Utterance]
    skipped_lines: int = 0

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    def __len__(self) -> int:
        return len(self.utterances)


def _parse_line(obj: dict) -> Utterance:
    transcript_id = obj["transcript_id"]
    utterance_index = obj["utterance_index"]
    speaker = Speaker(obj["speaker"])
    gloss = obj["gloss"]
    if not isinstance(transcript_id, str) or not transcript_id:
        raise ValueError("transcript_id must be a non-empty string")
    if not isinstance(utterance_index, int) or utterance_index < 0:
        raise ValueError("utterance_index must be a non-negative integer")
    if not isinstance(gloss, list) or not all(isinstance(t, str) for t in gloss):
        raise ValueError("gloss must be a list of strings")
    phon_raw = obj.get("phon")
    phon: tuple[PhonemeSeq, ...] | None = None
    if phon_raw is not None:
        if len(phon_raw) != len(gloss):
            raise ValueError("phon and gloss must align one-to-one")
        phon = tuple(parse_segments(tokens) for tokens in phon_raw)
    age = obj.get("age_months")
    if age is not None:
        age = float(age)
        if age <= 0:
            raise ValueError("age_months must be positive")
    return Utterance(
        transcript_id=transcript_id,
        utterance_index=utterance_index,
        speaker=speaker,
        gloss_tokens=tuple(gloss),
        phon_tokens=phon,
        age_months=age,
    )


def load_corpus(path: str | Path) -> LoadedCorpus:
    """Load a JSON-lines corpus, grouping and ordering per transcript.

    Malformed lines (bad JSON, schema violations, phon/gloss misalignment,
    duplicate utterance indices) are skipped and counted.
    """
    path = Path(path)
    by_transcript: dict[str, dict[int, Utterance]] = {}
    order: list[str] = []
    skipped = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                utt = _parse_line(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                skipped += 1
                log.warning("%s:%d: skipping malformed line (%s)", path, lineno, exc)
                continue
            if utt.transcript_id not in by_transcript:
                order.append(utt.transcript_id)
            bucket = by_transcript.setdefault(utt.transcript_id, {})
            if utt.utterance_index in bucket:
                skipped += 1
                log.warning(
                    "%s:%d: duplicate utterance_index %d in transcript %r",
                    path, lineno, utt.utterance_index, utt.transcript_id,
                )
                continue
            bucket[utt.utterance_index] = utt
    utterances: list[Utterance] = []
    for tid in order:
        utterances.extend(u for _, u in sorted(by_transcript[tid].items()))
    return LoadedCorpus(utterances, skipped_lines=skipped)


@dataclass(frozen=True)
class VowelInventory:
    """Base vowel letters used to find vocalic nuclei.

    A phoneme is vocalic when every base character left after stripping
    combining marks, length marks, and superscript modifiers is in
    ``bases``. Diphthongs written as two vowel letters therefore count as
    vocalic without separate entries.
    """

    bases: frozenset[str]

    @classmethod
    def default(cls) -> "VowelInventory":
        text = resources.files("mishear").joinpath("data/vowels.txt").read_text("utf-8")
        bases = frozenset(
            line.strip() for line in text.splitlines()
            if line.strip() and not line.startswith("#")
        )
        return cls(bases)

    def is_vocalic(self, phoneme: str) -> bool:
        bases = [
            ch
            for ch in unicodedata.normalize("NFD", phoneme)
            if unicodedata.category(ch) not in ("Mn", "Mc", "Me")
            and not ("ʰ" <= ch <= "˿")
        ]
        return bool(bases) and all(ch in self.bases for ch in bases)


_DEFAULT_VOWELS: VowelInventory | None = None


def default_vowels() -> VowelInventory:
    global _DEFAULT_VOWELS
    if _DEFAULT_VOWELS is None:
        _DEFAULT_VOWELS = VowelInventory.default()
    return _DEFAULT_VOWELS


def syllable_count(seq: PhonemeSeq, inventory: VowelInventory | None = None) -> int:
    """Count vocalic nuclei: each maximal run of vocalic phonemes is one.

    Raises NoNucleusError when the sequence has no vocalic segment.
    """
    if len(seq) == 0:
        raise ValueError("syllable_count requires a non-empty sequence")
    inventory = inventory or default_vowels()
    count = 0
    in_run = False
    for seg in seq:
        if inventory.is_vocalic(seg):
            if not in_run:
                count += 1
            in_run = True
        else:
            in_run = False
    if count == 0:
        raise NoNucleusError(f"no vocalic segment in {seq!r}")
    return count


#: Exclusion reason codes, in the order checks are applied.
REASON_NO_PHON = "no_phon"
REASON_XXX_TOKEN = "xxx_token"
REASON_NO_NUCLEUS = "no_nucleus"
REASON_NOT_MONOSYLLABIC = "not_monosyllabic"
REASON_SENTINEL_IN_UTTERANCE = "sentinel_in_utterance"
REASON_EXTRA_SENTINEL = "extra_sentinel_in_utterance"
REASON_EMPTY_GLOSS = "empty_gloss"
REASON_NOT_IN_PRIOR_VOCAB = "gloss_not_in_prior_vocab"
REASON_NOT_IN_LEXICON = "gloss_not_in_lexicon"


@dataclass
class SelectionResult:
    tokens: list[ProductionToken]
    exclusions: Counter = field(default_factory=Counter)

    @property
    def successes(self) -> list[ProductionToken]:
        return [t for t in self.tokens if t.kind is TokenKind.SUCCESS]

    @property
    def failures(self) -> list[ProductionToken]:
        return [t for t in self.tokens if t.kind is TokenKind.FAILURE]


def _is_monosyllabic(seq: PhonemeSeq, inventory: VowelInventory,
                     include_vowelless: bool) -> tuple[bool, str | None]:
    try:
        n = syllable_count(seq, inventory)
    except NoNucleusError:
        if include_vowelless:
            return True, None
        return False, REASON_NO_NUCLEUS
    if n != 1:
        return False, REASON_NOT_MONOSYLLABIC
    return True, None


def select_tokens(
    corpus: Sequence[Utterance],
    lexicon,
    prior_vocab: Iterable[str],
    w: int = 20,
    *,
    inventory: VowelInventory | None = None,
    include_vowelless: bool = False,
) -> SelectionResult:
    """Screen child tokens into successes and failures.

    Successes must be monosyllabic, sit in an utterance with no sentinel
    tokens, and have a gloss present in both the prior vocabulary and the
    lexicon. Failures are tokens glossed ``yyy``, monosyllabic, with no
    other sentinel in the utterance; an utterance yields at most one.
    Context windows hold up to ``w`` utterances each side within the same
    transcript.
    """
    inventory = inventory or default_vowels()
    prior_vocab = set(prior_vocab)
    result = SelectionResult(tokens=[])

    transcripts: dict[str, list[Utterance]] = {}
    for utt in corpus:
        transcripts.setdefault(utt.transcript_id, []).append(utt)

    for tid, utts in transcripts.items():
        for i, utt in enumerate(utts):
            if utt.speaker is not Speaker.CHILD:
                continue
            sentinel_positions = [
                j for j, g in enumerate(utt.gloss_tokens)
                if normalize_gloss(g) in SENTINELS
            ]
            for j, gloss_raw in enumerate(utt.gloss_tokens):
                if utt.phon_tokens is None or len(utt.phon_tokens[j]) == 0:
                    result.exclusions[REASON_NO_PHON] += 1
                    continue
                observed = utt.phon_tokens[j]
                gloss = normalize_gloss(gloss_raw)
                if gloss == XXX:
                    result.exclusions[REASON_XXX_TOKEN] += 1
                    continue
                if gloss == YYY:
                    ok, reason = _is_monosyllabic(observed, inventory, include_vowelless)
                    if not ok:
                        result.exclusions[reason] += 1
                        continue
                    if any(p != j for p in sentinel_positions):
                        result.exclusions[REASON_EXTRA_SENTINEL] += 1
                        continue
                    kind, final_gloss = TokenKind.FAILURE, None
                else:
                    ok, reason = _is_monosyllabic(observed, inventory, include_vowelless)
                    if not ok:
                        result.exclusions[reason] += 1
                        continue
                    if sentinel_positions:
                        result.exclusions[REASON_SENTINEL_IN_UTTERANCE] += 1
                        continue
                    if not gloss:
                        result.exclusions[REASON_EMPTY_GLOSS] += 1
                        continue
                    if gloss not in prior_vocab:
                        result.exclusions[REASON_NOT_IN_PRIOR_VOCAB] += 1
                        continue
                    if gloss not in lexicon:
                        result.exclusions[REASON_NOT_IN_LEXICON] += 1
                        continue
                    kind, final_gloss = TokenKind.SUCCESS, gloss
                context = ContextWindow(
                    before=tuple(utts[max(0, i - w):i]),
                    after=tuple(utts[i + 1:i + 1 + w]),
                    masked_utterance=utt,
                    mask_index=j,
                )
                result.tokens.append(ProductionToken(
                    id=f"{tid}:{utt.utterance_index}:{j}",
                    observed=observed,
                    kind=kind,
                    gloss=final_gloss,
                    context=context,
                    age_months=utt.age_months,
                    transcript_id=tid,
                    utterance_index=utt.utterance_index,
                    token_index=j,
                ))
    return result
