class PreconditionError(ValueError):
    """A numerical precondition of the algorithm is violated (e.g. the tau bound)."""


class ConvergenceError(RuntimeError):
    """An iterative routine did not reach its tolerance."""


class FormatError(ValueError):
    """A file does not match the expected on-disk layout."""
