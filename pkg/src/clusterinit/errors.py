"""Exception types shared across the toolkit."""


class ClusterInitError(Exception):
    """Base class for toolkit errors."""


class InvalidConfigError(ClusterInitError, ValueError):
    """Generator configuration violates its invariants."""


class InfeasibleSeparationError(ClusterInitError):
    """Center rejection sampling exhausted its attempt budget."""


class BadModelArtifactError(ClusterInitError):
    """Model file is unreadable or does not match the expected input signature."""


class IndexUndefinedError(ClusterInitError):
    """Validity index is undefined for the given partition."""


class SweepFailedError(ClusterInitError):
    """Every k in an index sweep failed to produce a value."""


class DegenerateDataError(ClusterInitError):
    """Data admits no meaningful value (zero dispersion, singular component)."""
