"""Exception hierarchy shared by all modules.

Each error carries a short machine-readable code; the CLI maps the classes
to process exit codes (config 2, solver 3, invariant 4).
"""


class BilliardError(Exception):
    """Base class for all package errors."""

    code = "error"


class ConfigError(BilliardError):
    """Invalid configuration or invalid arguments to a public operation."""

    code = "config"


class GeometryError(ConfigError):
    """Degenerate or out-of-domain geometric input."""

    code = "geometry"


class InvalidSegmentError(GeometryError):
    code = "invalid-segment"


class InsideObstacleError(GeometryError):
    code = "inside-obstacle"


class SolverError(BilliardError):
    """Orbit solver failed to converge or hit an unsupported configuration."""

    code = "solver"


class InvariantError(BilliardError):
    """A certified post-condition failed; indicates a bug, never swallowed."""

    code = "invariant"
