"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems exit 1, guard trips
exit 2, broken internal invariants exit 3.
"""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConfigError(ValueError):
    """A configuration file or flag set could not be parsed or validated."""


class GuardError(RuntimeError):
    """A resource or size guard refused to run a computation."""


class RegimeOverflowError(GuardError, OverflowError):
    """A resolved sequence length does not fit in 62 bits."""


class InvariantError(AssertionError):
    """An internal invariant was violated."""
