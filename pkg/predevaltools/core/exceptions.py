from pathlib import Path
from typing import Optional, Union


class PredEvalError(Exception):
    """
    Base class for every error raised by predevaltools.

    Attributes:
        exit_code (int): Stable process exit code used by the command-line interface.
    """
    exit_code = 1


class ConfigurationError(PredEvalError, ValueError):
    """Invalid or inconsistent configuration: unknown metric, missing inputs, bad parameters."""
    exit_code = 2


class DataError(PredEvalError, ValueError):
    """
    Malformed or inconsistent input data.

    Parameters:
        message (str): What went wrong.
        path (Optional[str | Path]): The offending file, if any.
        line (Optional[int]): 1-based line number inside `path`, if known.
    """
    exit_code = 3

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None, line: Optional[int] = None):
        self.message = message
        self.path = str(path) if path is not None else None
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        if self.path is None:
            return self.message
        if self.line is None:
            return f'{self.path}: {self.message}'
        return f'{self.path}:{self.line}: {self.message}'


class NumericalError(PredEvalError, ArithmeticError):
    """Numerical failure: non-convergence, divergence or degenerate statistics."""
    exit_code = 4
