"""Exception and warning classes raised across the package."""


class LevyApproxError(Exception):
    """Base class for all package errors."""


class ModelError(LevyApproxError, ValueError):
    """Invalid Lévy model parameters."""


class ZeroMass(ModelError):
    """The second-moment measure has total mass zero."""


class UnsupportedModel(LevyApproxError):
    """The requested operation has no exact route for this model."""


class NumericalFailure(LevyApproxError):
    """A numerical routine did not reach its accuracy target."""


class QuadratureFailure(NumericalFailure):
    pass


class NonDifferentiable(LevyApproxError, ValueError):
    pass


class MomentInfinite(LevyApproxError):
    pass


class MeshTooCoarse(LevyApproxError, ValueError):
    """The net's mesh violates ``|tau| < 1 / mu(R)``."""


class DegenerateObjective(LevyApproxError):
    pass


class DegenerateF(LevyApproxError, ValueError):
    """F is of the form a + b X_1, so the lower-bound probe is void."""


class IntegralDivergent(LevyApproxError):
    pass


class TruncationDominates(NumericalFailure):
    pass


class PositivityViolated(LevyApproxError):
    pass


class InvalidNet(LevyApproxError, ValueError):
    pass


# warnings

class LevyApproxWarning(UserWarning):
    pass


class GridTooCoarse(LevyApproxWarning):
    pass


class TruncationWarning(LevyApproxWarning):
    pass


class InconclusiveWarning(LevyApproxWarning):
    pass


class IllConditioned(LevyApproxWarning):
    pass
