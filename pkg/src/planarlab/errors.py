"""Exception types shared across the package.

The CLI maps these onto exit codes: NumericFailure -> 1, DomainError -> 2,
ResourceError -> 3.
"""


class PlanarLabError(Exception):
    pass


class DomainError(PlanarLabError, ValueError):
    """Input outside the domain of an operation."""


class ResourceError(PlanarLabError, RuntimeError):
    """A configured size/degree cap was exceeded."""


class NumericFailure(PlanarLabError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy answer."""


class BlowUp(NumericFailure):
    """Finite-time escape detected by step-size underflow at large norm."""

    def __init__(self, t, state, message="finite-time blow-up"):
        super().__init__(f"{message} at t={t!r}")
        self.t = t
        self.state = state


class PoleError(NumericFailure):
    def __init__(self, t, state):
        super().__init__(f"trajectory reached a pole of the field at t={t!r}")
        self.t = t
        self.state = state


class LeftDomain(NumericFailure):
    def __init__(self, t, state):
        super().__init__(f"trajectory left the admissible domain at t={t!r}")
        self.t = t
        self.state = state


class NoReturn(NumericFailure):
    pass


class Sliding(NumericFailure):
    def __init__(self, point):
        super().__init__(f"sliding region reached at {tuple(point)!r}")
        self.point = tuple(point)


class Tangency(NumericFailure):
    def __init__(self, point):
        super().__init__(f"tangency with the switching curve at {tuple(point)!r}")
        self.point = tuple(point)
