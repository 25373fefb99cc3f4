"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class BarycenterError(Exception):
    exit_code = 1


class DataError(BarycenterError, ValueError):
    """Malformed or invalid input data (measures, weights, files)."""

    exit_code = 2


class SizeCapError(BarycenterError):
    """Raised when exact centroid-set enumeration would exceed the configured cap."""

    exit_code = 3


class SolverError(BarycenterError, RuntimeError):
    exit_code = 4
