"""Exception hierarchy shared across the package.

ConfigError maps to CLI exit code 1, DataError (and subclasses) to exit
code 2.
"""


class ClarankError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ClarankError):
    """Bad or missing configuration: config file, stoplist path, flag values."""


class DataError(ClarankError):
    """Malformed or inconsistent input data."""


class IndexingError(DataError):
    """Corpus cannot be indexed (duplicate doc ids, malformed corpus lines)."""


class IndexFormatError(DataError):
    """Index file is not a recognizable container (bad magic, truncated)."""


class IndexVersionError(DataError):
    """Index container declares an unsupported format version."""


class ConversationParseError(DataError):
    """Conversation file line is malformed or missing a required field."""


class QrelsParseError(DataError):
    """Relevance judgment file line is malformed."""


class RunParseError(DataError):
    """Run file line is malformed or ranks are not contiguous."""


class MissingJudgmentsError(DataError):
    """A ranked list's facet key has no judgments."""


class EmptyQueryError(DataError):
    """Query has no scoreable terms (all stopped or unseen)."""


class UnseenTermError(DataError):
    """Term does not occur anywhere in the collection."""


class StatsError(ClarankError):
    """Base class for statistical-test failures."""


class InsufficientDataError(StatsError):
    """Too few samples for the requested test."""


class DegenerateVarianceError(StatsError):
    """Zero variance where the test statistic needs a spread."""


class UndefinedCorrelationError(StatsError):
    """Correlation undefined (constant input vector)."""
