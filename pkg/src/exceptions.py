"""
Error types raised by the degen-calc kernels and verification suites
"""
from typing import Optional


class DegenCalcError(Exception):
    """Base class for every error raised by degen-calc"""


class InvalidParams(DegenCalcError, ValueError):
    """Operator or suite parameters violate their constraints"""


class MalformedInput(DegenCalcError, ValueError):
    """An input file or string could not be parsed"""


class DimensionMismatch(DegenCalcError, ValueError):
    """Operands live in different ambient dimensions"""


class AxisOutOfRange(DegenCalcError, IndexError):
    """Axis index outside 0..n"""


class NotDivisible(DegenCalcError, ArithmeticError):
    """Exact polynomial division left a remainder"""


class SingularEvaluation(DegenCalcError, ArithmeticError):
    """A base is non-positive where its exponent needs it positive"""


class SingularSystem(DegenCalcError, ArithmeticError):
    """An exact linear system that should be invertible is not"""


class NotHomogeneous(DegenCalcError, ValueError):
    pass


class OddParity(DegenCalcError, ValueError):
    pass


class DegenerateLevel(DegenCalcError):
    """Inversion chain asked for a level past p-1"""


class PoorFit(DegenCalcError):
    """Asymptotic remainder decays slower than the expansion claims"""


class NonconstantRemainder(DegenCalcError):
    """Bubble image is not a constant multiple of the expected power"""


class OracleMismatch(DegenCalcError):
    """Symbolic bubble constant disagrees with the radial oracle"""


class NonConvergentLimit(DegenCalcError):
    """Extrapolation over a shrinking sequence did not stabilize"""


class Inconclusive(DegenCalcError):
    """Integrability test saw neither a geometric tail nor power growth"""


class PremiseViolated(DegenCalcError):
    """A premise (-A)^k f >= 0 failed on the radial grid"""

    def __init__(self, k: int, radius: float, value: Optional[float] = None):
        self.k = k
        self.radius = radius
        self.value = value
        super().__init__(
            f"premise (-A)^{k} f >= 0 violated at r={radius:.6g}"
            + (f" (value {value:.6g})" if value is not None else ""))
