"""Exception types shared across the package."""


class BudgetError(ValueError):
    """Raised when a requested computation exceeds a configured size cap."""


class ConfigError(ValueError):
    """Raised for malformed run configurations or weight/group syntax."""
