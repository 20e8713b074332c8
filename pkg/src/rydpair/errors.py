"""Exception types shared across the package.

The command line interface maps these onto distinct exit codes, so the
library raises the most specific type that applies:

* :class:`ConfigError` for invalid user input (unknown species, impossible
  quantum numbers, contradictory options),
* :class:`NumericalError` for runtime numerical failures (integration that
  did not converge, eigensolver breakdown),
* :class:`DataFileError` for problems with the species data file itself
  (missing keys, malformed values, failed schema validation).
"""

from __future__ import annotations


class RydpairError(Exception):
    """Base class for all package specific errors."""


class ConfigError(RydpairError):
    """Invalid configuration or user input."""


class NumericalError(RydpairError):
    """A numerical routine failed to produce a trustworthy result."""


class DataFileError(RydpairError):
    """The species data file is missing, malformed, or inconsistent."""
