"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid scenario, decision, or tuning configuration."""


class TrajectoryError(ValueError):
    """Malformed or inconsistent trajectory data."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge within its iteration cap."""
