"""
Custom exceptions for instance handling, solving and persistence.
"""
from typing import Optional, Sequence


class MtspError(Exception):
    """Base exception for solver errors."""
    def __init__(self, message: str, error_code: str):
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


class InstanceParseError(MtspError):
    """Exception raised when an instance file cannot be parsed."""
    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, "PARSE_ERROR")
        self.line = line


class InvalidSalesmenCountError(MtspError):
    """Exception raised when m is outside [1, n_cities]."""
    def __init__(self, m: int, n_cities: int):
        super().__init__(
            f"Number of salesmen must be in [1, {n_cities}], got {m}.",
            "INVALID_M",
        )
        self.m = m
        self.n_cities = n_cities


class ParamsError(MtspError):
    """Exception raised for invalid solver parameters."""
    def __init__(self, message: str):
        super().__init__(message, "INVALID_PARAMS")


class ConstructionError(MtspError):
    """Exception raised when a construction precondition is violated."""
    def __init__(self, message: str):
        super().__init__(message, "CONSTRUCTION_FAILED")


class InfeasibleSolutionError(MtspError):
    """Exception raised when routes do not partition the cities."""
    def __init__(
        self,
        missing: Sequence[int] = (),
        duplicated: Sequence[int] = (),
        message: Optional[str] = None,
    ):
        self.missing = sorted(missing)
        self.duplicated = sorted(duplicated)
        if message is None:
            message = (
                f"Routes do not partition the cities: "
                f"missing={self.missing}, duplicated={self.duplicated}"
            )
        super().__init__(message, "INFEASIBLE_SOLUTION")


class SubsolverError(MtspError):
    """Exception raised for invalid restricted problems."""
    def __init__(self, message: str):
        super().__init__(message, "SUBSOLVER_ERROR")


class SubsolverContractError(MtspError):
    """Exception raised when a subsolver selection leaves a city uncovered."""
    def __init__(self, missing: Sequence[int]):
        self.missing = sorted(missing)
        super().__init__(
            f"Selection does not cover cities {self.missing}",
            "SUBSOLVER_CONTRACT",
        )


class InvariantViolationError(MtspError):
    """Exception raised when an internal invariant check fails."""
    def __init__(self, message: str):
        super().__init__(message, "INVARIANT_VIOLATION")


class StorageError(MtspError):
    """Exception raised when output cannot be read or written."""
    def __init__(self, message: str):
        super().__init__(message, "STORAGE_ERROR")
