"""Exception types shared across the package."""


class EvposError(Exception):
    """Base class for package-specific errors."""


class InputError(EvposError):
    """Malformed user input; maps to CLI exit code 1."""


class ConsistencyViolation(EvposError):
    """A theorem-level consistency check failed (CLI exit code 2).

    Raised only when two routes that must agree on valid inputs disagree,
    or when a proved implication fails on computed data.  Either case is a
    bug or a genuine counterexample and is always worth a witness dump.
    """

    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses if witnesses is not None else []


class NotInIdeal(EvposError):
    """Vector has a nonzero entry outside the gauge vector's support."""


class ExpmOverflow(EvposError):
    """exp(tA) left the representable floating-point range."""


class EigenSolverFailure(EvposError):
    """Eigen residuals did not meet the required tolerance."""


class NotAnEigenpair(EvposError):
    pass


class CertificateMissing(EvposError):
    pass


class PremiseViolation(EvposError):
    """A documented hypothesis failed; carries the failing samples."""

    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses if witnesses is not None else []


class SpectralBoundNotNegative(EvposError):
    pass


class SearchFailure(EvposError):
    """A witness scan exhausted its budget without success."""


class WitnessSearchFailure(SearchFailure):
    pass


class DepthExceeded(EvposError):
    pass


class ShiftNotOnGrid(EvposError):
    pass


class QuadratureBudgetExceeded(EvposError):
    pass


class DimensionTooLarge(EvposError):
    pass


class NoConvergence(EvposError):
    pass


class TransferViolation(ConsistencyViolation):
    """Invariance failed to transfer where the theory says it must."""


class CouplingPremiseWarning(UserWarning):
    """Coupling premise failed on samples; order conclusions are not asserted."""
