"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: InputError and ResourceBudgetError
terminate with code 2, InvariantViolation with code 3.
"""

from __future__ import annotations

from typing import Any


class CD4Error(Exception):
    """Base class for all errors raised by this package."""


class InputError(CD4Error):
    """Malformed or out-of-contract input (bad JSON, range violations,
    vocabulary mismatches, precondition failures on public operations)."""


class ResourceBudgetError(CD4Error):
    """A configured enumeration or search budget was exceeded."""


class InvariantViolation(CD4Error):
    """A property that is guaranteed by the underlying theory failed to
    hold.  Either a non-CD(4) template slipped past validation or there
    is a bug; the payload carries whatever diagnostic state was at hand.
    """

    def __init__(self, message: str, payload: Any = None):
        super().__init__(message)
        self.payload = payload
