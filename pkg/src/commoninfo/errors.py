"""Semantic exception hierarchy shared by all modules."""


class CommonInfoError(Exception):
    """Base class for all library errors."""


class NegativeMass(CommonInfoError, ValueError):
    """A probability entry is below zero."""


class NotNormalized(CommonInfoError, ValueError):
    """Probabilities do not sum to one within tolerance."""

    def __init__(self, total, tol=1e-9):
        self.total = float(total)
        self.tol = float(tol)
        super().__init__(f"probabilities sum to {self.total!r}, expected 1 within {tol}")


class ShapeMismatch(CommonInfoError, ValueError):
    """Array length or alphabet shape disagrees with the declared spec."""


class EmptyKeepSet(CommonInfoError, ValueError):
    """A marginal or entropy was requested over an empty variable set."""


class OverlappingSets(CommonInfoError, ValueError):
    """Variable index sets that must be disjoint overlap."""


class OutOfRange(CommonInfoError, ValueError):
    """A scalar parameter lies outside its documented domain."""


class TensorTooLarge(CommonInfoError, ValueError):
    """The requested joint tensor exceeds the cell-count cap."""


class InvalidConfig(CommonInfoError, ValueError):
    """An optimizer or simulator configuration violates its invariants."""


class NonConvergence(CommonInfoError, RuntimeError):
    """Every restart hit the iteration cap without settling."""


class InconsistentEstimates(CommonInfoError, RuntimeError):
    """The two dual estimates disagree beyond the cross-check tolerance."""

    def __init__(self, test_channel_value, entropy_route_value, cross_tol):
        self.test_channel_value = float(test_channel_value)
        self.entropy_route_value = float(entropy_route_value)
        self.cross_tol = float(cross_tol)
        super().__init__(
            "dual estimates disagree: test-channel route "
            f"{self.test_channel_value:.6f} vs entropy route "
            f"{self.entropy_route_value:.6f} (cross_tol {cross_tol})"
        )


class TooManyParameters(CommonInfoError, ValueError):
    """The brute-force grid would enumerate an infeasible parameter count."""


class IncompatibleAux(CommonInfoError, ValueError):
    """An auxiliary model does not reproduce the source law within tolerance."""


class BudgetExceeded(CommonInfoError, ValueError):
    """A simulation configuration exceeds the exact-evaluation budget."""


class ParseError(CommonInfoError, ValueError):
    """A distribution file failed to parse."""

    def __init__(self, line, reason):
        self.line = int(line)
        self.reason = str(reason)
        super().__init__(f"line {self.line}: {self.reason}")
