"""Exception types for configuration, checkpoint and simulation failures."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class CheckpointFormatError(ValueError):
    """Model checkpoint file is malformed or inconsistent."""


class SimulationDivergedError(FloatingPointError):
    """Split-step propagation produced non-finite field values."""
