"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numeric failures exit 3, I/O problems exit 4.
"""


class UninError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(UninError):
    """Invalid configuration value, flag, or config-file key."""


class ShapeError(UninError):
    """Array shapes do not conform to an operation's contract."""


class NumericError(UninError):
    """A computation produced NaN/Inf or otherwise left the finite domain."""


class ContractError(UninError):
    """A caller violated an operation's precondition."""


class MaskError(UninError):
    """A mask left no valid entries where at least one is required."""


class ParseError(UninError):
    """Malformed input data; the message names the offending line."""


class DatasetError(UninError):
    """A dataset is empty or cannot be split as requested."""


class CheckpointError(UninError):
    """A checkpoint file is malformed or inconsistent with its config."""
