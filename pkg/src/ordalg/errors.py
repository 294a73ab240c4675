"""Shared exception types.

The CLI maps these onto exit codes: any :class:`InputError` (including
subclasses) is an input problem (exit 2), :class:`BudgetError` is a
resource-budget overrun (exit 3).  :class:`InternalInvariantError` marks a
state the underlying mathematics rules out; raising it indicates a defect,
never bad input.
"""


class InputError(ValueError):
    """Malformed arguments or a violated operation precondition."""


class ValidationError(InputError):
    """A structure expression violates a declared shape constraint.

    The message names the violated clause.
    """


class NoApplicableTheoremError(InputError):
    """No classification rule covers the expression; refusing to guess."""


class BudgetError(RuntimeError):
    """A configured resource budget (size, rounds, rank, depth) was exceeded."""


class InternalInvariantError(RuntimeError):
    """A mathematically guaranteed condition failed; indicates a defect."""
