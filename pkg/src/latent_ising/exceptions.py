"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Array shapes do not agree with the declared dimension."""


class EnumerationCapError(ValueError):
    """Exact enumeration over 2**d states was requested beyond the cap."""


class SingularMatrixError(ValueError):
    """A matrix that must be positive definite is (numerically) singular."""


class ConfigError(ValueError):
    """A configuration field is missing or invalid.

    ``field`` names the offending entry so command line tools can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
