"""Exception types raised by the solvers."""


class InvalidParams(ValueError):
    pass


class NoConvergence(RuntimeError):
    """An iterative solve exhausted its budget.

    ``diagnostics`` carries whatever the solver knew when it gave up
    (final residuals, iteration counts).
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class BracketFailure(NoConvergence):
    pass


class QuadratureError(NoConvergence):
    pass
