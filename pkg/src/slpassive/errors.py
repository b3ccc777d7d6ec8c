"""Exception hierarchy shared by all modules."""


class SLPassiveError(Exception):
    pass


class NonHermitian(SLPassiveError):
    def __init__(self, asymmetry: float):
        super().__init__(f"matrix is not Hermitian (max |M - M^H| = {asymmetry:.3e})")
        self.asymmetry = asymmetry


class NonSquare(SLPassiveError):
    pass


class DimensionMismatch(SLPassiveError):
    pass


class NotNormalized(SLPassiveError):
    pass


class BadParameter(SLPassiveError):
    pass


class TooLarge(BadParameter):
    pass


class BadTemperature(BadParameter):
    pass


class CoherenceTooLarge(BadParameter):
    pass


class NotIsometry(SLPassiveError):
    pass


class IndexOutOfRange(SLPassiveError):
    pass


class BranchSingularity(SLPassiveError):
    pass


class NotApplicable(SLPassiveError):
    """Raised when a ground (or top) state violates the threshold hypotheses."""
