from typing import Optional


class DepthlabError(ValueError):
    """Base class for every error depthlab raises on bad input or configuration."""


class ConfigError(DepthlabError):
    pass


class ValidationError(DepthlabError):
    pass


class ParseError(DepthlabError):
    """
    A machine file could not be parsed

    Args:
        message (str): What was wrong
        line (int): 1-based line number of the offending line, if known
    """

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DecodeError(DepthlabError):
    pass


class NotLosslessError(DepthlabError):
    def __init__(self, message: str, verdict=None):
        self.verdict = verdict
        super().__init__(message)


# errors reported with exit status 1 by the command line tool, everything else is 2
DOMAIN_ERRORS = (NotLosslessError, DecodeError, OSError)
