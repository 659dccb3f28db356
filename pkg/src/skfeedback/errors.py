"""Exception hierarchy shared by the library and the command-line launcher."""


class SkFeedbackError(Exception):
    """Base exception for every error raised by skfeedback."""
    def __init__(self, message: str):
        super().__init__(message)


class DomainError(SkFeedbackError, ValueError):
    """A numeric argument lies outside the domain of the function."""


class ConfigError(SkFeedbackError, ValueError):
    """A system configuration (in code or in a JSON file) is invalid."""


class UsageError(SkFeedbackError, ValueError):
    """An operation was called with inputs of the wrong shape or kind."""


class ErrorFloorError(SkFeedbackError):
    """The feedback SNR is too low for the modulo construction (lambda * snr_fb <= 1)."""


class InfeasibleError(SkFeedbackError):
    """The requested error probability cannot be reached."""


class CouplingViolation(SkFeedbackError):
    """The modulo scheme and its coupled twin diverged before the first aliasing event."""
    def __init__(self, message: str, diagnostics: list[dict] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
