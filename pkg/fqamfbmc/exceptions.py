"""Exception hierarchy. The CLI maps these to exit codes in one place."""


class FqamFbmcError(ValueError):
    """Base class for every error raised by the library"""

    exit_code = 3


class ConfigError(FqamFbmcError):
    """Experiment configuration failed validation"""

    exit_code = 2

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if field_path else message)


class FilterFileError(FqamFbmcError):
    """Coefficient file is malformed or does not describe a usable filter"""

    exit_code = 2


class DimensionError(FqamFbmcError):
    """Array shapes disagree with the declared configuration"""


class BitUnderrunError(FqamFbmcError):
    """The bit stream ran out while encoding a frame"""


class InsufficientDataError(FqamFbmcError):
    """Too few samples or symbols for the requested estimate"""
