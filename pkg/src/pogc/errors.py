"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class PogError(Exception):
    """Base class for model diagnostics (CLI exit code 2)."""

    code = "PogError"

    def __init__(self, message: str, *, line: int | None = None, names: tuple[str, ...] = ()):
        super().__init__(message)
        self.message = message
        self.line = line
        self.names = tuple(names)

    def __str__(self) -> str:
        prefix = f"line {self.line}: " if self.line else ""
        return f"{self.code}: {prefix}{self.message}"


class NetlistSyntaxError(Exception):
    """Malformed netlist text (CLI exit code 1)."""

    code = "SyntaxError"

    def __init__(self, message: str, line: int, column: int, expected: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        detail = f" (expected {expected})" if expected else ""
        super().__init__(f"line {line}, column {column}: {message}{detail}")


class ValidationFailed(PogError):
    code = "ValidationFailed"


class TopologyError(PogError):
    code = "TopologyError"


class NonSeriesParallel(TopologyError):
    code = "NonSeriesParallel"


class DisconnectedSegment(TopologyError):
    code = "DisconnectedSegment"


class MultiPortSegment(TopologyError):
    code = "MultiPortSegment"


class CausalityConflict(PogError):
    code = "CausalityConflict"


class SignInconsistency(PogError):
    code = "SignInconsistency"


class AlgebraicLoop(PogError):
    code = "AlgebraicLoop"


class SingularEnergyMatrix(PogError):
    code = "SingularEnergyMatrix"


class PoleAtS(PogError):
    code = "PoleAtS"


class SingularT(PogError):
    code = "SingularT"


class SideConditionViolated(PogError):
    code = "SideConditionViolated"


class MissingTdot(PogError):
    code = "MissingTdot"


class NonEliminable(PogError):
    code = "NonEliminable"


class NonFiniteState(PogError):
    code = "NonFiniteState"

    def __init__(self, message: str, step: int, state):
        super().__init__(message)
        self.step = step
        self.state = state


class IncompatibleLabels(PogError):
    code = "IncompatibleLabels"


class ModelFormatError(PogError):
    code = "ModelFormatError"
