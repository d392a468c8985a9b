"""mishear: Bayesian recovery of intended words from noisy child speech.

Given phonetically transcribed productions in discourse context, combine a
context-conditioned prior over a candidate vocabulary with a phoneme
edit-distance likelihood to obtain a posterior over intended words, then
analyze surprisal, failure prediction, and information gain over corpora.
"""

__version__ = "0.1.0"

from .analysis import (
    InfoGainRecord,
    RocCurve,
    SurprisalReport,
    information_gain_by_age,
    kl_divergence,
    roc_failures,
    surprisal_report,
)
from .corpus import (
    ContextWindow,
    ProductionToken,
    Speaker,
    TokenKind,
    Utterance,
    VowelInventory,
    load_corpus,
    select_tokens,
    syllable_count,
)
from .errors import MishearError
from .likelihood import (
    DistanceCache,
    LikelihoodConfig,
    LikelihoodVector,
    calibrate_beta,
    likelihood_vector,
)
from .phonology import (
    PhonemeSeq,
    PronunciationEntry,
    PronunciationLexicon,
    edit_distance,
    load_lexicon,
    tokenize_ipa,
)
from .posterior import (
    PosteriorDecoder,
    PosteriorResult,
    entropy,
    posterior,
    score_token,
    surprisal,
)
from .priors import (
    ExternalPrior,
    NgramPrior,
    PriorDistribution,
    UniformPrior,
    UnigramPrior,
    uniform_prior,
    unigram_prior,
)
from .vocabulary import CandidateVocab, build_vocab, count_glosses

__all__ = [
    "CandidateVocab",
    "ContextWindow",
    "DistanceCache",
    "ExternalPrior",
    "InfoGainRecord",
    "LikelihoodConfig",
    "LikelihoodVector",
    "MishearError",
    "NgramPrior",
    "PhonemeSeq",
    "PosteriorDecoder",
    "PosteriorResult",
    "PriorDistribution",
    "ProductionToken",
    "PronunciationEntry",
    "PronunciationLexicon",
    "RocCurve",
    "Speaker",
    "SurprisalReport",
    "TokenKind",
    "UniformPrior",
    "UnigramPrior",
    "Utterance",
    "VowelInventory",
    "build_vocab",
    "calibrate_beta",
    "count_glosses",
    "edit_distance",
    "entropy",
    "information_gain_by_age",
    "kl_divergence",
    "likelihood_vector",
    "load_corpus",
    "load_lexicon",
    "posterior",
    "roc_failures",
    "score_token",
    "select_tokens",
    "surprisal",
    "surprisal_report",
    "syllable_count",
    "tokenize_ipa",
    "uniform_prior",
    "unigram_prior",
]
