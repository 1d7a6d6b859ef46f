"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid spec, plan, or run configuration. Message names the offending field."""


class DataError(ValueError):
    """Malformed or inconsistent input data (ragged vectors, bad timestamps, ...)."""


class HarnessError(RuntimeError):
    """Evaluation harness misuse, e.g. missing ground-truth sidecar."""
