"""
Riesz-CG Errors
Exception hierarchy shared by the algebra, solver and harness modules
"""
from typing import Iterable, List, Optional


class RieszCGError(Exception):
    """Base class for all library errors"""


def _indices(indices: Optional[Iterable[int]]) -> List[int]:
    return sorted(int(i) for i in (indices or []))


class EmptySpace(RieszCGError):
    """Measure space has no sample of positive weight"""


class NegativeWeight(RieszCGError):
    """A sample weight is negative or not finite"""

    def __init__(self, index: int, weight: float):
        super().__init__(f"weight at sample {index} is {weight}")
        self.index = index
        self.weight = weight


class SpaceMismatch(RieszCGError):
    """Operands live on different measure spaces"""


class DimensionMismatch(RieszCGError):
    """Vector/matrix dimensions do not agree"""


class _SampleSetError(RieszCGError):
    """Error witnessed by a set of sample indices"""

    label = "samples"

    def __init__(self, indices: Optional[Iterable[int]] = None, message: str = ""):
        self.indices = _indices(indices)
        super().__init__(message or f"{self.label}: {self.indices}")


class NotInvertible(_SampleSetError):
    """Element is not one-signed on positive measure"""
    label = "not invertible at samples"


class NotStrictlyPositive(_SampleSetError):
    """Element is not strictly positive on positive measure"""
    label = "not strictly positive at samples"


class DenominatorNotInvertible(_SampleSetError):
    """p^T A p fails S-membership during a CG step"""
    label = "denominator vanishes at samples"


class NotSymmetric(RieszCGError):
    """Matrix is not symmetric a.e."""


class NotPositiveDefinite(RieszCGError):
    """Matrix (or a quadratic form value) is not positive definite"""


class EigenNoConvergence(RieszCGError):
    """Jacobi sweeps did not converge at a sample"""

    def __init__(self, sample: int, sweeps: int):
        super().__init__(f"Jacobi did not converge at sample {sample} after {sweeps} sweeps")
        self.sample = sample
        self.sweeps = sweeps


class BadInterval(RieszCGError):
    """Interval endpoints are not admissible"""


class BadKappa(RieszCGError):
    """Condition number below 1"""


class SingularSpectrum(RieszCGError):
    """Smallest eigenfunction is not bounded away from zero"""


class BadParameters(RieszCGError):
    """Generator parameters out of range"""


class SingularSample(RieszCGError):
    """Per-sample matrix is numerically singular"""

    def __init__(self, index: int):
        super().__init__(f"matrix is singular at sample {index}")
        self.index = index


class ShapeMismatch(RieszCGError):
    """Trace and oracle do not describe the same problem"""


class ProblemIOError(RieszCGError):
    """File could not be read or written"""


class ParseError(RieszCGError):
    """Malformed JSON payload"""

    def __init__(self, message: str, position: int = -1):
        super().__init__(f"{message} (position {position})")
        self.position = position


class ValidationError(RieszCGError):
    """Well-formed payload with invalid content"""

    def __init__(self, field: str, message: str = ""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field


class ConfigError(RieszCGError):
    """Invalid configuration value"""
