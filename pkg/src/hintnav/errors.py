"""Package-level exception types."""


class ConfigError(ValueError):
    """Invalid configuration value or experiment file (CLI exit code 2)."""


class CorruptionRejected(ValueError):
    """A corruption spec that would disconnect the world was refused."""


class TrainingDiverged(RuntimeError):
    """A training loss became non-finite; carries the step diagnostic."""
