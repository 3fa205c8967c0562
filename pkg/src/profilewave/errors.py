"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent grids, dimensions or parameters."""


class ResolutionError(ValueError):
    """A quadrature is too coarse for the oscillation it has to resolve."""


class DomainError(ValueError):
    """A function was queried outside the region where it is defined."""
