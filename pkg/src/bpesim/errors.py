"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """A requested size exceeds a hard resource limit (e.g. dense-vector qubit caps)."""


class ConfigError(ValueError):
    """An experiment or circuit configuration field failed validation.

    `field` names the offending key so CLI errors can point at it.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
