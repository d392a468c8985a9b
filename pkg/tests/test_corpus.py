import json

import pytest

from mishear.corpus import (
    Speaker,
    TokenKind,
    VowelInventory,
    load_corpus,
    normalize_gloss,
    select_tokens,
    syllable_count,
)
from mishear.errors import NoNucleusError
from mishear.phonology import PhonemeSeq, load_lexicon

from synth import make_utterance


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def utt_row(tid="t1", idx=0, speaker="CHI", gloss=("hi",), phon=None, age=24.0):
    return {
        "transcript_id": tid,
        "utterance_index": idx,
        "speaker": speaker,
        "age_months": age,
        "gloss": list(gloss),
        "phon": phon,
    }


class TestLoadCorpus:
    def test_two_wellformed_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [utt_row(idx=0), utt_row(idx=1)])
        loaded = load_corpus(path)
        assert len(loaded) == 2 and loaded.skipped_lines == 0
        assert [u.utterance_index for u in loaded.utterances] == [0, 1]

    def test_misaligned_phon_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            utt_row(idx=0, gloss=("a", "b"), phon=[["a"]]),
            utt_row(idx=1),
        ])
        loaded = load_corpus(path)
        assert len(loaded) == 1 and loaded.skipped_lines == 1

    def test_bad_json_and_bad_speaker_skipped(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rows = [json.dumps(utt_row(idx=0)), "{not json", json.dumps(utt_row(idx=1, speaker="DAD"))]
        path.write_text("\n".join(rows) + "\n", encoding="utf-8")
        loaded = load_corpus(path)
        assert len(loaded) == 1 and loaded.skipped_lines == 2

    def test_wide_utterance_aligns_tokens(self, tmp_path):
        # "I want to read" with four aligned phoneme sequences
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [utt_row(
            gloss=("I", "want", "to", "read"),
            phon=[["aɪ"], ["w", "ɑ", "n"], ["d", "ə"], ["w", "i", "d"]],
        )])
        loaded = load_corpus(path)
        (utt,) = loaded.utterances
        assert len(utt.gloss_tokens) == len(utt.phon_tokens) == 4
        assert utt.phon_tokens[3] == PhonemeSeq(["w", "i", "d"])

    def test_orders_within_transcript_and_dedupes(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [
            utt_row(idx=2), utt_row(idx=0), utt_row(idx=2),
            utt_row(tid="t2", idx=5),
        ])
        loaded = load_corpus(path)
        assert loaded.skipped_lines == 1
        assert [(u.transcript_id, u.utterance_index) for u in loaded.utterances] == [
            ("t1", 0), ("t1", 2), ("t2", 5),
        ]

    def test_speaker_mapping(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [utt_row(idx=0, speaker="MOT"), utt_row(idx=1, speaker="OTH")])
        loaded = load_corpus(path)
        assert loaded.utterances[0].speaker is Speaker.CAREGIVER
        assert loaded.utterances[1].speaker is Speaker.OTHER


class TestSyllableCount:
    def test_single_vowel(self):
        assert syllable_count(PhonemeSeq(["w", "i", "d"])) == 1

    def test_two_nuclei(self):
        # oracle: hand count, eɪ and i are separate nuclei
        assert syllable_count(PhonemeSeq(["b", "eɪ", "b", "i"])) == 2

    def test_fet_is_monosyllabic(self):
        assert syllable_count(PhonemeSeq(["f", "ɛ", "t"])) == 1

    def test_adjacent_vowels_form_one_nucleus(self):
        assert syllable_count(PhonemeSeq(["t", "a", "ɪ", "d"])) == 1

    def test_no_nucleus_raises(self):
        with pytest.raises(NoNucleusError):
            syllable_count(PhonemeSeq(["m", "m"]))

    def test_custom_inventory(self):
        inv = VowelInventory(frozenset({"m"}))
        assert syllable_count(PhonemeSeq(["m", "m"]), inv) == 1

    def test_diacritics_ignored_for_vocalicity(self):
        assert syllable_count(PhonemeSeq(["ãː"])) == 1


def normalize(s):
    return normalize_gloss(s)


class TestNormalizeGloss:
    def test_lowercase_and_punctuation(self):
        assert normalize("Read,") == "read"
        assert normalize("don't") == "don't"
        assert normalize("YYY") == "yyy"


@pytest.fixture
def small_lexicon(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text(
        "word\tipa\tsyllables\n"
        "read\tɹ i d\t1\n"
        "want\tw ɑ n t\t1\n"
        "to\tt ə\t1\n"
        "i\taɪ\t1\n"
        "see\ts i\t1\n",
        encoding="utf-8",
    )
    return load_lexicon(path)


def chi(idx, gloss, phon, tid="t1"):
    return make_utterance(tid=tid, idx=idx, speaker=Speaker.CHILD,
                          gloss=gloss, phon=phon, age=24.0)


def mot(idx, gloss, tid="t1"):
    return make_utterance(tid=tid, idx=idx, speaker=Speaker.CAREGIVER,
                          gloss=gloss, age=24.0)


class TestSelectTokens:
    def test_success_selection(self, small_lexicon):
        corpus = [
            mot(0, ("you", "want", "mamma", "let's", "see")),
            chi(1, ("I", "want", "to", "read"),
                [["aɪ"], ["w", "ɑ", "n"], ["d", "ə"], ["w", "i", "d"]]),
            mot(2, ("okay", "that's", "fine")),
        ]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words, w=20)
        glosses = [(t.kind, t.gloss) for t in result.tokens]
        assert (TokenKind.SUCCESS, "read") in glosses
        read_token = next(t for t in result.tokens if t.gloss == "read")
        assert read_token.observed == PhonemeSeq(["w", "i", "d"])
        assert read_token.context.mask_index == 3
        assert len(result.successes) == 4  # i, want, to, read

    def test_failure_selection(self, small_lexicon):
        corpus = [chi(0, ("you", "make", "your", "yyy"),
                      [["j", "u"], ["m", "eɪ", "k"], ["j", "ɔ", "ɹ"], ["f", "ɛ", "t"]])]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words, w=20)
        assert len(result.failures) == 1
        failure = result.failures[0]
        assert failure.kind is TokenKind.FAILURE and failure.gloss is None
        assert failure.observed == PhonemeSeq(["f", "ɛ", "t"])
        # the other tokens sit in a sentinel-bearing utterance
        assert result.exclusions["sentinel_in_utterance"] == 3

    def test_two_yyy_yields_neither(self, small_lexicon):
        corpus = [chi(0, ("yyy", "yyy"), [["f", "ɛ"], ["t", "ɛ"]])]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words)
        assert result.tokens == []
        assert result.exclusions["extra_sentinel_in_utterance"] == 2

    def test_yyy_with_xxx_rejected(self, small_lexicon):
        corpus = [chi(0, ("xxx", "yyy"), [["d", "ʌ"], ["f", "ɛ"]])]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words)
        assert result.failures == []
        assert result.exclusions["xxx_token"] == 1
        assert result.exclusions["extra_sentinel_in_utterance"] == 1

    def test_polysyllabic_excluded(self, small_lexicon):
        corpus = [chi(0, ("baby",), [["b", "eɪ", "b", "i"]])]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words)
        assert result.tokens == []
        assert result.exclusions["not_monosyllabic"] == 1

    def test_gloss_not_in_whitelist_or_lexicon(self, small_lexicon):
        corpus = [chi(0, ("blicket",), [["b", "ɪ", "k"]])]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words)
        assert result.exclusions["gloss_not_in_prior_vocab"] == 1
        result = select_tokens(corpus, small_lexicon,
                               small_lexicon.words | {"blicket"})
        assert result.exclusions["gloss_not_in_lexicon"] == 1

    def test_vowelless_excluded_by_default_flag_includes(self, small_lexicon):
        corpus = [chi(0, ("yyy",), [["m", "m"]])]
        assert select_tokens(corpus, small_lexicon, set()).exclusions["no_nucleus"] == 1
        result = select_tokens(corpus, small_lexicon, set(), include_vowelless=True)
        assert len(result.failures) == 1

    def test_window_clipped_at_transcript_edges(self, small_lexicon):
        corpus = [mot(i, (f"w{i}",)) for i in range(3)]
        corpus.append(chi(3, ("see",), [["s", "i"]]))
        corpus.extend(mot(i, (f"w{i}",), tid="t2") for i in range(5))
        result = select_tokens(corpus, small_lexicon, small_lexicon.words, w=20)
        (token,) = result.tokens
        assert len(token.context.before) == 3
        assert len(token.context.after) == 0  # t2 not visible from t1

    def test_window_size_respected(self, small_lexicon):
        corpus = [mot(i, (f"w{i}",)) for i in range(10)]
        corpus.append(chi(10, ("see",), [["s", "i"]]))
        corpus.extend(mot(11 + i, (f"v{i}",)) for i in range(10))
        result = select_tokens(corpus, small_lexicon, small_lexicon.words, w=2)
        (token,) = result.tokens
        assert [u.utterance_index for u in token.context.before] == [8, 9]
        assert [u.utterance_index for u in token.context.after] == [11, 12]

    def test_every_selected_success_resolves(self, small_lexicon):
        corpus = [
            chi(0, ("see", "read"), [["s", "i"], ["ɹ", "i", "d"]]),
            chi(1, ("blicket",), [["b", "ɪ", "k"]]),
        ]
        result = select_tokens(corpus, small_lexicon, small_lexicon.words)
        for token in result.successes:
            assert token.gloss in small_lexicon
            assert syllable_count(token.observed) == 1
