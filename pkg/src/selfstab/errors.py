"""Exception types shared across the library."""


class SelfStabError(Exception):
    """Base class for all library-specific errors."""


class InvalidModel(SelfStabError, ValueError):
    """A potential/interaction pair violates the structural assumptions."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("model validation failed: " + "; ".join(self.violations))


class NonconfiningPotential(SelfStabError, ValueError):
    """Effective potential does not grow to +inf on both sides."""


class ToleranceNotReached(SelfStabError, RuntimeError):
    """Adaptive quadrature refinement stalled before the requested tolerance."""


class DegenerateMinimum(SelfStabError, ValueError):
    """Expansion point is not a unique nondegenerate global minimum."""


class BoundaryMinimum(SelfStabError, ValueError):
    """Minimum of the phase function sits on the integration boundary."""


class OddOrderContact(SelfStabError, ValueError):
    """First nonvanishing derivative at the minimum has odd order."""


class ZeroMinimizer(SelfStabError, ValueError):
    """Moment-ratio expansion requested at a vanishing minimizer (n >= 2)."""


class WrongPotential(SelfStabError, ValueError):
    """Closed-form branch formulas requested for a potential they do not cover."""


class NotConverged(SelfStabError, RuntimeError):
    """Fixed-point solver ran out of iterations; carries the best iterate."""

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class Blowup(SelfStabError, RuntimeError):
    """A simulated particle left the numerically safe region."""


class InvalidConfig(SelfStabError, ValueError):
    """Simulation or solver configuration is inconsistent."""
