"""Exception types shared across the package, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration or input file (exit code 1)."""


class NumericalError(RuntimeError):
    """Divergence or failed numerical procedure (exit code 2)."""


class EmptyZoneError(ValueError):
    """A zone-restricted density matrix was requested for a zone with no walkers."""
