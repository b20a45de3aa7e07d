"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so the split matters: a `SpecError`
is the caller's fault (bad table, wrong types, unresolved name), an
`InvariantViolation` means a result that should hold by construction did not.
"""


class ImpcatError(Exception):
    pass


class SpecError(ImpcatError, ValueError):
    """Ill-formed input: non-total tables, type mismatches, unknown names."""


class PreconditionError(SpecError):
    """An operation was asked to run on data that fails its stated precondition."""


class InvariantViolation(ImpcatError, RuntimeError):
    """Something guaranteed by construction turned out false."""
