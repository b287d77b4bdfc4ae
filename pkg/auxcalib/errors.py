"""
Exceptions raised by the calibration library and the command line front end.
"""


class CalibrationError(Exception):
    """Base class of every error raised on purpose by auxcalib."""


class InvalidInputError(CalibrationError, ValueError):
    """Non-finite values, dimension mismatches or empty inputs."""


class DatasetParseError(CalibrationError):
    """
    A dataset file could not be parsed.

    Attributes:
        line_number (int): 1-based line of the offending row.
        path (str or None): File being read.
    """

    def __init__(self, message, line_number, path=None):
        self.line_number = line_number
        self.path = path
        location = f"{path}:" if path else ""
        super().__init__(f"{location}line {line_number}: {message}")


class FitError(CalibrationError):
    """A calibrator could not be fitted on the given data."""


class InvalidModelError(CalibrationError):
    """A calibrator model is malformed or does not match the data."""


class UndefinedMetricError(CalibrationError):
    """A metric is undefined for the given outcomes."""


class ConfigError(CalibrationError):
    """An invalid configuration value."""
