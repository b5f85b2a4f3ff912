"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class FairPFCError(Exception):
    """Base class for every error raised by fairpfc."""

    exit_code = 4


class InputError(FairPFCError, ValueError):
    """Bad input: malformed file, invalid schema, out-of-domain argument.

    ``line`` and ``field`` are 1-based positions when the error comes from a
    parser, otherwise ``None``.
    """

    exit_code = 2

    def __init__(self, message: str, line: int | None = None, field: int | None = None):
        self.message = message
        self.line = line
        self.field = field
        super().__init__(self._format())

    def _format(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field is not None:
            where.append(f"field {self.field}")
        if where:
            return f"{', '.join(where)}: {self.message}"
        return self.message


class ParseError(InputError):
    """A file does not follow its documented grammar."""


class UndefinedMetricError(InputError):
    """A metric cannot be computed because every denominator is empty."""


class InfeasibleSelectionError(FairPFCError):
    """A constrained selection criterion admits no candidate."""

    exit_code = 3


class InvariantError(FairPFCError):
    """An internal consistency check failed."""

    exit_code = 4
