# core/errors.py
#
# ============================================================================
# WHAT THIS FILE DOES:
# Defines every error the toolkit can raise, grouped into the categories the
# command line maps to exit codes:
#
#   InvalidInputError  → exit 2  (bad file, bad shape, negative entry, ...)
#   PreconditionError  → exit 3  (reducible matrix, rho too large, ...)
#   NumericFailureError→ exit 4  (solver did not converge, singular system)
#
# Library code only ever raises these. main.py is the one place that catches
# them and turns them into a message plus an exit code.
# ============================================================================


class SpectralEconError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code = 1


class InvalidInputError(SpectralEconError, ValueError):
    """The input is malformed: wrong shape, non-finite or negative entries."""

    exit_code = 2


class PreconditionError(SpectralEconError):
    """The input is well formed but violates an operation's precondition."""

    exit_code = 3


class DivergenceError(PreconditionError):
    """A Neumann-type series has no finite sum (delta * rho >= 1 or similar)."""


class ModelViolationError(PreconditionError):
    """A utility model breaks the costly-actions assumption at some point."""


class NoRecoverableStructureError(PreconditionError):
    """The observed market has no eigen-structure strong enough to act on."""


class NumericFailureError(SpectralEconError, ArithmeticError):
    """A numerical routine failed; `diagnostics` says what was observed."""

    exit_code = 4

    def __init__(self, message: str, diagnostics: dict = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SingularSystemError(NumericFailureError):
    """A linear system that must be solved is singular to working precision."""


class SpectralEconWarning(UserWarning):
    """Non-fatal condition worth surfacing (negative equilibrium component, ...)."""


def exit_code_for(error: BaseException) -> int:
    """Exit code for an exception; anything unexpected is a numeric failure."""
    if isinstance(error, SpectralEconError):
        return error.exit_code
    return NumericFailureError.exit_code
