"""Exception hierarchy shared across the package."""


class SpatialUctError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(SpatialUctError, ValueError):
    """A graph violates a structural precondition (isolated node, coincident positions...)."""


class DataError(SpatialUctError, ValueError):
    """Input data (GML, edge list, coordinates, manifest) could not be used."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(SpatialUctError, ValueError):
    """Invalid combination of options, e.g. a baseline used with the wrong objective."""


class InvalidActionError(SpatialUctError, ValueError):
    """An action outside the valid action set was applied to an MDP state."""


class ReplayError(SpatialUctError, RuntimeError):
    """A recorded result did not reproduce when re-simulated."""
