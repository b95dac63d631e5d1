"""
Exception hierarchy shared by every subpackage.

Each class also derives from the builtin that callers would naturally catch
(ValueError / RuntimeError), so code written against plain builtins keeps
working. The CLI maps the three families to exit codes:

- ConfigError      -> 2
- InputParseError  -> 3
- NumericalError   -> 4
"""

from typing import Optional


class KinSdfError(Exception):
    """Base class. Carries optional file/field context for error reports."""

    exit_code: int = 4

    def __init__(self, message: str, file: Optional[str] = None, field: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.file = file
        self.field = field

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
            "file": self.file,
            "field": self.field,
        }


class ConfigError(KinSdfError, ValueError):
    exit_code = 2


class InputParseError(KinSdfError, ValueError):
    exit_code = 3


class NumericalError(KinSdfError, RuntimeError):
    exit_code = 4


class DegenerateInputError(NumericalError, ValueError):
    """Rank-deficient or zero-extent geometry."""


class NotARotationError(NumericalError, ValueError):
    """Matrix fails the orthonormality / determinant check."""


class BehindCameraError(NumericalError, ValueError):
    """Point projected with depth at or behind the image plane."""


class NonFiniteFieldError(NumericalError, ValueError):
    """A scalar field returned NaN or inf at a lattice point."""


class DivergenceError(NumericalError):
    """Training loss became non-finite."""


class DimensionMismatchError(KinSdfError, ValueError):
    exit_code = 2


class ShortageError(KinSdfError, ValueError):
    """Not enough samples of one sign to build a balanced batch."""

    exit_code = 4

    def __init__(self, message: str, sign: str):
        super().__init__(message, field=sign)
        self.sign = sign
