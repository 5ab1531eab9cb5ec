"""
Exception hierarchy for the profile-LMM package.

Each category maps onto one stable CLI exit code (see ``EXIT_CODES``).
"""

from typing import Dict, Optional, Type


class ProfileLMMError(Exception):
    """Base class for all package errors."""


class SpecError(ProfileLMMError, ValueError):
    """Invalid configuration, model specification or command usage."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DataError(ProfileLMMError, ValueError):
    """Invalid input data (CSV content, dataset invariants)."""

    def __init__(self, message: str, row: Optional[int] = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ParameterError(ProfileLMMError, ValueError):
    """Invalid distribution parameter passed to a sampler."""


class NumericalError(ProfileLMMError, RuntimeError):
    """Numerical failure during sampling or post-processing."""


class FactorizationError(NumericalError):
    """Cholesky factorization failed; ``site`` names the update that produced the matrix."""

    def __init__(self, site: str, detail: str = ""):
        message = f"matrix is not positive definite at {site}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.site = site


class SamplerError(NumericalError):
    """A Gibbs block failed; carries the iteration index and block name."""

    def __init__(self, iteration: int, block: str, cause: Exception):
        super().__init__(f"iteration {iteration}, block '{block}': {cause}")
        self.iteration = iteration
        self.block = block


class ValidationFailure(NumericalError):
    """The sampler-correctness suite did not pass."""


EXIT_CODES: Dict[Type[ProfileLMMError], int] = {
    SpecError: 1,
    DataError: 2,
    ParameterError: 3,
    NumericalError: 3,
}


def exit_code_for(error: BaseException) -> int:
    """Return the CLI exit code for an exception (1 for anything unrecognised)."""
    for error_type, code in EXIT_CODES.items():
        if isinstance(error, error_type):
            return code
    return 1
