from typing import Optional


class HurstEstimatorException(Exception):
    """Base exception for the Hurst estimation library"""
    error_code = "internal"
    exit_code = 5

    def __init__(self, message: str, details: Optional[str] = None):
        self.message = message
        self.details = details
        super().__init__(self.message)


class InvalidArgumentException(HurstEstimatorException):
    """Raised when an argument is outside its admissible domain"""
    error_code = "invalid-argument"
    exit_code = 2


class InvalidLevelRangeException(InvalidArgumentException):
    """Raised when a level range is empty or outside the decomposition"""
    error_code = "invalid-level-range"


class InputParseException(HurstEstimatorException):
    """Raised when an input file cannot be turned into a signal"""
    error_code = "input-parse"
    exit_code = 3


class InputUnreadableException(InputParseException):
    """Raised when the input file cannot be opened or decoded"""
    error_code = "input-unreadable"


class EmptyInputException(InputParseException):
    """Raised when the input holds no samples"""
    error_code = "input-empty"


class NonNumericInputException(InputParseException):
    """Raised when a data row does not parse as a number"""
    error_code = "input-non-numeric"


class SignalLengthException(InputParseException):
    """Raised when the signal length is not usable (too short, or not a power of two under strict mode)"""
    error_code = "input-length"


class ReportFormatException(InputParseException):
    """Raised when a stored report cannot be parsed"""
    error_code = "report-format"


class DegenerateInputException(HurstEstimatorException):
    """Raised when level energies vanish and the likelihood is undefined"""
    error_code = "degenerate-input"
    exit_code = 4


class InsufficientLevelsException(HurstEstimatorException):
    """Raised when fewer than two levels are available to an estimator"""
    error_code = "insufficient-levels"
    exit_code = 4


class InternalConsistencyException(HurstEstimatorException):
    """Raised on conditions that indicate a bug rather than bad input"""
    error_code = "internal"
    exit_code = 5
