"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value; ``key`` names the offending config path."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DimensionError(ValueError):
    pass


class DomainError(ValueError):
    pass


class GridError(ValueError):
    pass


class BlowUpError(RuntimeError):
    """Non-finite or runaway values; ``t`` is the last time with a valid state."""

    def __init__(self, message, t):
        self.t = t
        super().__init__(f"{message} (last valid t={t:.6g})")


class InterfaceSolveError(RuntimeError):
    def __init__(self, message, residuals):
        self.residuals = list(residuals)
        super().__init__(f"{message}; residual history: {self.residuals}")
