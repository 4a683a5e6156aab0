"""Exception types shared across the toolkit."""


class EsmError(Exception):
    """Base class for all esmkit errors."""


class DataError(EsmError):
    """A data file or row violates the input contract.

    Carries the 1-based data row index when the failure is row-specific.
    """

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConfigError(EsmError):
    """A run or module configuration is inconsistent or incomplete."""


class UndefinedFlowError(EsmError):
    """A window has zero total flow, so its imbalance value is undefined."""


class InternalConsistencyError(EsmError):
    """A defensive internal check failed (e.g. a monotonicity violation)."""
