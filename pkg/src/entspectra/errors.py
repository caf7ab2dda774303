"""Exception hierarchy for the entspectra toolkit.

Every domain error raised by the library derives from EntspectraError, so
callers (and the CLI) can distinguish bad input from genuine bugs.
"""


class EntspectraError(Exception):
    """Base class for all domain errors raised by this package."""


# -- finite metric spaces -----------------------------------------------------

class NonzeroDiagonal(EntspectraError):
    def __init__(self, i, value):
        super().__init__(f"dist[{i}][{i}] = {value}, expected 0")
        self.index = i


class AsymmetricMatrix(EntspectraError):
    def __init__(self, i, j):
        super().__init__(f"dist[{i}][{j}] != dist[{j}][{i}]")
        self.pair = (i, j)


class ZeroDistance(EntspectraError):
    def __init__(self, i, j):
        super().__init__(f"dist[{i}][{j}] = 0 for distinct vertices")
        self.pair = (i, j)


class TriangleViolation(EntspectraError):
    def __init__(self, i, j, k):
        super().__init__(
            f"triangle inequality fails: dist[{i}][{k}] > dist[{i}][{j}] + dist[{j}][{k}]"
        )
        self.triple = (i, j, k)


class DisconnectedGraph(EntspectraError):
    pass


class NonpositiveWeight(EntspectraError):
    def __init__(self, edge, weight):
        super().__init__(f"edge {edge} has nonpositive weight {weight}")
        self.edge = edge


class BadParams(EntspectraError):
    pass


class NonpositiveEps(EntspectraError):
    def __init__(self, eps):
        super().__init__(f"eps must be positive, got {eps}")
        self.eps = eps


# -- entourages ---------------------------------------------------------------

class MixedSpaces(EntspectraError):
    pass


class BadVertex(EntspectraError):
    def __init__(self, x, n):
        super().__init__(f"vertex {x} out of range for space with {n} vertices")
        self.vertex = x


class NotChained(EntspectraError):
    def __init__(self, witness=None, message=None):
        super().__init__(message or f"entourage is not chained (witness pair {witness})")
        self.witness = witness


class NotConnected(EntspectraError):
    pass


# -- chains and moves ---------------------------------------------------------

class StepNotInEntourage(EntspectraError):
    def __init__(self, index, pair):
        super().__init__(f"step {index}: pair {pair} not in entourage")
        self.index = index
        self.pair = pair


class IllegalMove(EntspectraError):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class EndpointRemoval(IllegalMove):
    def __init__(self, pos):
        super().__init__(f"cannot remove endpoint at position {pos}")
        self.pos = pos


class EndpointMismatch(EntspectraError):
    pass


class EntourageTooSmall(EntspectraError):
    pass


class PreconditionViolated(EntspectraError):
    def __init__(self, index, message=None):
        super().__init__(message or f"precondition violated at index {index}")
        self.index = index


class NotALoop(EntspectraError):
    pass


# -- covers -------------------------------------------------------------------

class UndecidedMerge(EntspectraError):
    """Raised when a cover-ball merge decision came back Unknown."""

    def __init__(self, loop_points):
        super().__init__(
            "nullity of a merge loop could not be decided within budget; "
            f"loop has {len(loop_points)} points"
        )
        self.loop_points = tuple(loop_points)


class RadiusExceeded(EntspectraError):
    pass


class BasepointMismatch(EntspectraError):
    pass


# -- spectra / budgets ----------------------------------------------------------

class BudgetExhausted(EntspectraError):
    pass


# -- parsing ------------------------------------------------------------------

class ParseError(EntspectraError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
