"""Exception types shared across the toolkit."""


class MishearError(Exception):
    """Base class for all mishear errors."""


class ConfigError(MishearError):
    """Invalid or contradictory run configuration."""


class DataError(MishearError):
    """Problem with input data files or their contents."""


class EmptySequenceError(DataError):
    """An IPA string contained no phoneme segments after stripping."""


class LexiconFormatError(DataError):
    """Pronunciation lexicon file is unreadable or missing its header."""


class CorpusFormatError(DataError):
    """Corpus file is unreadable or not JSON-lines."""


class NoNucleusError(MishearError):
    """A phoneme sequence contains no vocalic segment to count."""


class EmptyVocabError(DataError):
    """Candidate vocabulary construction produced an empty inventory."""


class WordNotInVocabError(MishearError):
    """A word was looked up that is not in the candidate vocabulary."""


class NoSuccessesError(MishearError):
    """Calibration requires at least one communicative success."""


class DegenerateDenominatorError(MishearError):
    """Prior mass is zero everywhere the likelihood is defined."""


class TokenSetMismatchError(MishearError):
    """Cross-model aggregation requires identical token sets."""


class SupportViolationError(MishearError):
    """KL divergence is undefined: q is zero where p has mass."""


class EmptyClassError(MishearError):
    """ROC construction needs at least one entropy in each class."""


class ProviderError(MishearError):
    """Base class for external prior provider failures."""


class ProviderUnreachableError(ProviderError):
    """The prior provider endpoint could not be reached."""


class ProtocolViolationError(ProviderError):
    """The prior provider returned a malformed or invalid response."""
