"""Exception hierarchy shared by all compactner modules.

Every error carries a short machine-parsable ``category`` used by the CLI
to emit single-line diagnostics with a stable prefix.
"""


class CompactnerError(Exception):
    category = "internal-error"


class DimensionError(CompactnerError):
    """Shape-incompatible operands; message names both shapes."""

    category = "shape-error"


class ParameterError(CompactnerError):
    """Invalid configuration value (T <= 0, empty batch list, ...)."""

    category = "config-error"


class ContractError(CompactnerError):
    """A documented invariant was violated (non-finite value, bad targets)."""

    category = "contract-error"


class ParseError(CompactnerError):
    """Malformed input data; message names the offending line."""

    category = "data-format-error"


class FormatError(CompactnerError):
    """Unreadable binary artifact (bad magic, version, truncation)."""

    category = "file-format-error"


class CoverageError(CompactnerError):
    """Teacher logits missing for sentences that need them."""

    category = "coverage-error"


class AlignmentError(CompactnerError):
    """Two artifacts disagree on vocab or tagset order."""

    category = "alignment-error"


class UsageError(CompactnerError):
    """Bad CLI invocation; message includes a remediation hint."""

    category = "usage-error"
