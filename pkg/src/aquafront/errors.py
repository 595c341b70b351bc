"""Exception hierarchy shared across the package."""

from __future__ import annotations


class AquafrontError(Exception):
    """Base class for all package errors."""


class ParseError(AquafrontError):
    """Input document could not be turned into a valid model.

    ``line`` is the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownSection(ParseError):
    pass


class DuplicateId(ParseError):
    pass


class DanglingReference(ParseError):
    pass


class MalformedRecord(ParseError):
    pass


class InvalidNetwork(ParseError):
    """Network parsed but violates a structural invariant (connectivity, reservoirs)."""


class NonContiguousIndex(ParseError):
    pass


class NonAscendingDiameter(ParseError):
    pass


class HydraulicError(AquafrontError):
    pass


class NonphysicalPipe(HydraulicError):
    pass


class Disconnected(HydraulicError):
    def __init__(self, nodes):
        self.nodes = tuple(nodes)
        super().__init__(f"nodes not connected to any reservoir: {', '.join(self.nodes)}")


class NotConverged(HydraulicError):
    def __init__(self, state):
        self.state = state
        super().__init__(
            f"no convergence after {state.iterations} iterations "
            f"(mass residual {state.max_mass_residual:.3e})"
        )


class DegenerateDenominator(AquafrontError):
    pass


class EmptyArchive(AquafrontError):
    pass


class ConfigInvalid(AquafrontError):
    pass


class InputNotAFront(AquafrontError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class RefPointInvalid(AquafrontError):
    pass


class IoFailure(AquafrontError):
    pass
