"""Exception types shared across the package."""


class MotionSynthError(Exception):
    """Base class for all errors raised by motionsynth."""


class NotInvertible(MotionSynthError, ZeroDivisionError):
    pass


class NotRealNorm(MotionSynthError, ValueError):
    """The norm polynomial P*conj(P) has non-real coefficients."""


class DegeneratePose(MotionSynthError, ValueError):
    pass


class OffQuadric(MotionSynthError, ValueError):
    """A dual quaternion violates the Study condition beyond tolerance."""


class DegenerateCloud(MotionSynthError, ValueError):
    pass


class DegenerateDirection(MotionSynthError, ValueError):
    pass


class DegenerateCurve(MotionSynthError, ValueError):
    pass


class DegenerateJoint(MotionSynthError, ValueError):
    pass


class NoCandidate(MotionSynthError, RuntimeError):
    pass


class ConditioningFailure(MotionSynthError, ArithmeticError):
    pass


class NonGeneric(MotionSynthError, ValueError):
    """The motion polynomial falls outside the generic factorization case."""


class ResidualTooLarge(MotionSynthError, ArithmeticError):
    pass


class IdenticalChains(MotionSynthError, ValueError):
    pass


class LineSearchFailed(MotionSynthError, RuntimeError):
    pass
