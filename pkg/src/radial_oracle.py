"""
Independent one-dimensional oracle for the bubble constant

On radial functions the weighted operator acts as f'' + ((D-1)/ρ) f' with
D = n+2a. Applying its negative p times to (t^2+ρ^2)^{-s}, s = (D-2p)/2,
gives K(t) (t^2+ρ^2)^{-s-2p}; this module computes K(t) with sympy alone,
so it shares no code with the multivariate algebra it cross-checks.
"""
import logging
from fractions import Fraction
from functools import lru_cache

import sympy

from src.exceptions import NonconstantRemainder
from src.models import OperatorParams

logger = logging.getLogger(__name__)


def _rational(value: Fraction) -> sympy.Rational:
    value = Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


@lru_cache(maxsize=64)
def _oracle(D: Fraction, p: int, t: Fraction) -> Fraction:
    rho = sympy.Symbol("rho", positive=True)
    sigma = sympy.Symbol("sigma", positive=True)
    dim = _rational(D)
    base = _rational(t) ** 2 + rho ** 2

    f = base ** (-sigma)
    for _ in range(p):
        f = -(sympy.diff(f, rho, 2) + (dim - 1) / rho * sympy.diff(f, rho))

    # every term carries a single power of the base; lift each by s+2p
    lifted = sympy.Integer(0)
    for term in sympy.Add.make_args(sympy.expand(f, power_exp=False, power_base=False)):
        lifted += sympy.powsimp(term * base ** (sigma + 2 * p), force=True)
    s = (dim - 2 * p) / 2
    ratio = sympy.cancel(sympy.expand(lifted.subs(sigma, s)))

    if ratio.free_symbols or not ratio.is_Rational:
        raise NonconstantRemainder(
            f"radial oracle left a non-constant factor {ratio} for D={D}, p={p}")
    return Fraction(int(ratio.p), int(ratio.q))


def radial_oracle_constant(params: OperatorParams, t: Fraction = Fraction(1)) -> Fraction:
    """K(t) with (-(d^2/dρ^2 + (D-1)/ρ d/dρ))^p (t^2+ρ^2)^{-s} = K(t) (t^2+ρ^2)^{-s-2p}"""
    K = _oracle(params.D, params.p, Fraction(t))
    logger.debug(f"radial oracle ({params.label()}, t={t}): K={K}")
    return K
