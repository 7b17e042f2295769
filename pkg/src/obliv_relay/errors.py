"""Exception hierarchy for the workbench.

Validation failures map to CLI exit code 1, resource-cap aborts to exit
code 2.  ``NumericsError`` marks internal tripwires (quantities that are
mathematically impossible, e.g. mutual information below -1e-12) and is
never raised for bad user input.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(WorkbenchError, ValueError):
    """Malformed input: bad probabilities, shapes, documents, or arguments."""


class TopologyError(ValidationError):
    """Channel/policy topology does not match the requested operation."""


class ResourceLimitError(WorkbenchError):
    """A hard size cap (dense-array cells, decode tuples, ...) was exceeded."""


class NumericsError(WorkbenchError):
    """An internal numerical invariant was violated; indicates a bug."""
