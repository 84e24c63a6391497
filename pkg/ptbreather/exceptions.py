from typing import Optional


class InvalidRule(Exception):
    pass


class InvalidRuleParam(Exception):
    pass


class ValidationError(Exception):

    def __init__(self, errors: Optional[dict] = None):
        super().__init__()
        self._errors = errors or {}

    def get_errors(self) -> dict:
        """Get the validation errors

        Returns:
            dict
        """
        return self._errors

    def __str__(self) -> str:
        return '; '.join(f"{key}: {' '.join(messages)}" for key, messages in self._errors.items())


class LatticeError(Exception):

    def __init__(self, message: str = '', details: Optional[dict] = None):
        """The init method

        Keyword Arguments:
            message (str) -- The human readable message (default '')
            details (Optional[dict]) -- Machine readable context (default None)
        """
        super().__init__(message)
        self._details = details or {}

    def get_details(self) -> dict:
        """Get the error details

        Returns:
            dict
        """
        return self._details


class InvalidStateError(LatticeError):
    pass


class DomainError(LatticeError):
    pass


class NoRealSolutionError(LatticeError):
    pass


class OutOfBranchError(LatticeError):
    pass


class UnsupportedBranchError(LatticeError):
    pass


class ContinuationError(LatticeError):
    pass


class NearBifurcationError(LatticeError):
    pass


class CoercivityViolation(LatticeError):
    pass


class DecompositionError(LatticeError):
    pass


class DegenerateDecompositionError(LatticeError):
    pass


class BlowUpError(LatticeError):
    pass


class SchemaError(LatticeError):
    pass


class InvariantFailure(LatticeError):
    pass
