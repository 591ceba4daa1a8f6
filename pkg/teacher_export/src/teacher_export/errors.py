"""Exporter error taxonomy; categories match the tagger CLI's wording."""


class ExporterError(Exception):
    category = "internal-error"


class ConfigError(ExporterError):
    """Bad settings, unusable pretrained weights, or an unusable split."""

    category = "config-error"


class ParseError(ExporterError):
    """Malformed CoNLL or manifest input."""

    category = "data-format-error"


class AlignmentError(ExporterError):
    """A sentence whose wordpieces cannot be mapped back to its words."""

    category = "alignment-error"


class UsageError(ExporterError):
    category = "usage-error"
