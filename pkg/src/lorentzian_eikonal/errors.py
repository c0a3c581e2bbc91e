"""Exception hierarchy shared by all modules."""


class EikonalError(Exception):
    """Base class for every error raised by this package."""


class PointOutsideSlab(EikonalError):
    pass


class SignatureError(EikonalError):
    pass


class SpacelikeVector(EikonalError):
    pass


class NotCausal(EikonalError):
    pass


class LeftSlab(EikonalError):
    pass


class StepFailure(EikonalError):
    pass


class NoConvergence(EikonalError):
    pass


class NotInPast(EikonalError):
    pass


class NotInFuture(EikonalError):
    pass


class NoHitInSlab(EikonalError):
    pass


class GridTooCoarse(EikonalError):
    pass


class NullMinimizer(EikonalError):
    pass


class DomainEdge(EikonalError):
    pass


class NonDifferentiable(EikonalError):
    pass


class AllProbesNonDifferentiable(EikonalError):
    pass


class EmptyLevelSet(EikonalError):
    pass


class MultipleRoots(EikonalError):
    pass


class NonNegativeC(EikonalError):
    pass


class NonpositiveArclength(EikonalError):
    pass


class ConfigError(EikonalError):
    pass


class ExpressionSyntaxError(EikonalError, ValueError):
    """Malformed expression text.

    ``position`` is the 0-based character offset where parsing stopped and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(sorted(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at position {position}{detail}")


class UnknownSymbol(EikonalError, ValueError):
    pass
