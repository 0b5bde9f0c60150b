"""Exception types shared across the package."""


class JSRLabError(Exception):
    """Base class for all errors raised by jsrlab."""


class UsageError(JSRLabError, ValueError):
    """Invalid arguments: dimension mismatch, bad shapes, caps exceeded."""


class ResourceError(JSRLabError, RuntimeError):
    """A computation would exceed a configured enumeration budget."""

    def __init__(self, message: str, limit_name: str, limit: float, required: float):
        super().__init__(message)
        self.limit_name = limit_name
        self.limit = limit
        self.required = required


class ConditioningError(JSRLabError, ArithmeticError):
    """A numerical rank decision fell inside the ambiguity band."""


class SchemaError(JSRLabError, ValueError):
    """An input document does not match the expected JSON schema."""
