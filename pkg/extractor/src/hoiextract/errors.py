"""Extractor error types."""


class ExtractorError(Exception):
    """Base class for extractor failures."""


class InputError(ExtractorError):
    """An input file or image cannot be read or violates its format."""


class ConfigError(ExtractorError):
    """Backbone/template configuration is incomplete or unknown."""
