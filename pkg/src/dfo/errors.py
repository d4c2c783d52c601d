"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid caller-supplied data: bad shapes, non-finite entries, bad knobs."""


class NumericalError(RuntimeError):
    """A computation produced non-finite values.

    ``point_index`` identifies the offending collocation point when known.
    """

    def __init__(self, message, point_index=None):
        super().__init__(message)
        self.point_index = point_index


class FitDivergenceError(RuntimeError):
    """Initial-condition fit produced a non-finite loss at ``iteration``."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


class IntegrationError(RuntimeError):
    """Time integration hit non-finite state at ``step_index``."""

    def __init__(self, message, step_index):
        super().__init__(message)
        self.step_index = step_index


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""
