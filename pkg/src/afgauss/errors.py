"""Exception types raised by the solvers and builders."""


class AFGaussError(Exception):
    """Base class for all package errors."""


class NonCoercive(AFGaussError):
    """The zeroth-order coefficient of a screened operator is not positive."""


class LinearSolveFailure(AFGaussError):
    pass


class RimNormTooLarge(AFGaussError):
    """|phi|_h >= 1/2 somewhere on the rim, so no algebraic boundary value exists."""


class MaxItersExceeded(AFGaussError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MonotonicityViolated(AFGaussError):
    pass


class LineSearchStalled(AFGaussError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ContinuationStalled(AFGaussError):
    """Path following along s*phi failed before reaching s = 1.

    ``s_star`` is the largest scale with a converged solve and ``result`` the
    corresponding SolveResult (None if not even the first step converged).
    """

    def __init__(self, message, s_star, result=None, history=None):
        super().__init__(message)
        self.s_star = s_star
        self.result = result
        self.history = history or []


class NotAlmostFuchsian(AFGaussError):
    pass


class DriftExceeded(AFGaussError):
    pass
