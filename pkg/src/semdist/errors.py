"""Exception types shared across the package.

Every error carries a short machine-readable ``kind`` so the CLI can emit
structured error JSON without string-matching messages.
"""


class SemdistError(Exception):
    """Base class for all package errors."""

    kind = "error"

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class EmbFormatError(SemdistError):
    """Malformed or unsupported EMB1 file."""

    kind = "emb_format"


class DataError(SemdistError):
    """Invalid data: shape/count mismatches, non-finite values, bad indices."""

    kind = "invalid_data"


class LexiconError(SemdistError):
    """Malformed lexicon file."""

    kind = "lexicon_parse"


class ConfigError(SemdistError):
    """Invalid configuration (CLI usage errors exit with code 2)."""

    kind = "config"
