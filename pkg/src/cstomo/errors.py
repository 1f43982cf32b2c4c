"""Exception taxonomy shared across the package.

Plain ValueError is used for bad call arguments (wrong shapes, negative
frequencies and the like); the classes here mark conditions that map to
distinct command-line exit codes.
"""


class ConfigurationError(ValueError):
    """A scenario or run configuration is inconsistent or incomplete."""


class NumericalError(RuntimeError):
    """A solve or update failed for numerical reasons."""


class DegenerateDataError(NumericalError):
    """Measured data cannot support the requested operation (e.g. all zeros)."""


class DegenerateStateError(NumericalError):
    """An inversion state reached a configuration with undefined normalizations."""
