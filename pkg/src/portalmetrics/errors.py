"""Exception hierarchy shared by all portalmetrics modules.

The CLI maps these onto exit codes: DomainError -> 1, FormatError and
ConfigError -> 2.
"""


class PortalMetricsError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PortalMetricsError):
    """Input is well-formed but outside an operation's domain (e.g. empty
    distribution, unknown site, no eligible visitors)."""


class FormatError(PortalMetricsError):
    """Input file or document does not conform to the expected format."""


class ConfigError(FormatError):
    """Invalid or missing configuration (bad threshold, missing input path)."""


class ComparabilityError(DomainError):
    """Reports cannot be compared: segment, period, or threshold metadata
    differ. Carries a human-readable explanation of the mismatch."""


class ReportValidationError(FormatError):
    """A report document failed schema validation or serialization.

    ``violations`` lists every schema violation found, not just the first;
    it is empty for serialization-level failures (non-JSON values).
    """

    def __init__(self, message, violations=()):
        self.violations = list(violations)
        if self.violations:
            message = message + ": " + "; ".join(self.violations)
        super().__init__(message)
