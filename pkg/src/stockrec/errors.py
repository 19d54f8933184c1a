"""Exception hierarchy shared across the package."""


class StockrecError(Exception):
    """Base class for all errors raised by this package."""


class DataError(StockrecError):
    """Malformed or inconsistent input data."""


class ValidationError(StockrecError):
    """Configuration or argument validation failure."""


class ComputationError(StockrecError):
    """A numerical routine could not produce a valid result."""
