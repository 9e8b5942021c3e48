"""Exception hierarchy shared by all modules."""


class WindingError(Exception):
    """Base class for every error raised by the package."""


# geometry
class NonNested(WindingError):
    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class NonPositiveRadius(WindingError):
    pass


class QuadratureNonConvergence(WindingError):
    pass


class AmbiguousBranch(WindingError):
    pass


class MissingArcData(WindingError):
    pass


# constants
class OrderingViolation(WindingError):
    pass


class NoAdmissibleTheta(WindingError):
    pass


class NoAdmissibleEpsilon(WindingError):
    pass


class KappaBarUnreachable(WindingError):
    pass


class LengthMismatch(WindingError):
    pass


# operator / solver
class DegenerateEllipticity(WindingError):
    pass


class SingularJacobian(WindingError):
    pass


class SolveFailure(WindingError):
    pass


class StepTooLarge(WindingError):
    pass


class ConfigError(WindingError):
    pass


class MixedDerivativeDominance(UserWarning):
    """Stencil lost the M-matrix sign pattern at some nodes; assembly still proceeds."""
