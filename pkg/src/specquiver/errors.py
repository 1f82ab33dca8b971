class ValidationError(ValueError):
    """Input violates a precondition (bad shape, bad profile, hypothesis not met)."""


class ResourceLimitError(RuntimeError):
    """An enumeration would exceed its configured budget."""
