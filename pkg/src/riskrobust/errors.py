"""Exception types shared across the package."""


class RiskRobustError(Exception):
    """Base class for all package errors."""


class DomainError(RiskRobustError, ValueError):
    """An argument lies outside the domain of an operation."""


class DivergenceError(RiskRobustError, ArithmeticError):
    """An integral (a moment, a tail integral, ...) is infinite.

    ``moment`` names the offending quantity so callers can report it.
    """

    def __init__(self, moment="integral", detail=""):
        self.moment = moment
        self.detail = detail
        msg = f"divergent {moment}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NotInOrliczSpaceError(DivergenceError):
    """E[Psi(|X|/lam)] is infinite for every tried lam."""


class NoRootError(RiskRobustError, ArithmeticError):
    """Root bracketing exceeded its overflow guard."""


class SingularityError(RiskRobustError, ArithmeticError):
    """A derivative is not finite where it must be."""


class UnsupportedEssentialSupremumError(RiskRobustError, ValueError):
    """A distortion with g(0+) > 0 was applied to a law unbounded below."""
