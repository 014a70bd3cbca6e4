"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1, numeric
failures exit 2, I/O problems exit 3.
"""


class ConfigError(Exception):
    """Invalid configuration: bad flag value, unknown key, inconsistent options."""


class NumericError(Exception):
    """A computation produced NaN/Inf or an otherwise unusable numeric state."""


class DegenerateInputError(NumericError):
    """Input has no usable direction, e.g. a vector with (near-)zero norm."""
