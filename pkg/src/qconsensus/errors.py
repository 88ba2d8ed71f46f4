"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input failed one or more validity checks.

    ``failures`` lists every check that failed, not just the first.
    """

    def __init__(self, failures, what="input"):
        if isinstance(failures, str):
            failures = [failures]
        self.failures = list(failures)
        super().__init__(f"invalid {what}: " + "; ".join(self.failures))


class ResourceError(RuntimeError):
    """A computation would exceed a configured size cap."""
