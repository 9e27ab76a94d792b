"""
The weighted operator  Δ + ((2a-1)/x_{n+1}) ∂_{n+1}  and the half-space operator
y ∂_y^2 + a ∂_y + Δ_x  it is conjugate to under x_{n+1} = 2 sqrt(y)
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from src.exceptions import DimensionMismatch, NotDivisible, OddParity
from src.models import OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr

logger = logging.getLogger(__name__)

Operand = Union[Poly, RadialPowerExpr]


@dataclass(frozen=True)
class HalfSpacePoly:
    """Polynomial in (x_1, ..., x_n, y); y is the last variable"""
    poly: Poly

    @property
    def n(self) -> int:
        return self.poly.dim - 1

    @classmethod
    def from_json(cls, payload) -> "HalfSpacePoly":
        return cls(Poly.from_json(payload))

    def __str__(self) -> str:
        return str(self.poly).replace(f"x{self.poly.dim}", "y")


def _check_dim(dim: int, params: OperatorParams) -> None:
    if dim != params.dim:
        raise DimensionMismatch(
            f"Operand lives in dimension {dim}, operator in {params.dim} ({params.label()})")


def weighted_laplacian_poly(p: Poly, params: OperatorParams) -> Poly:
    """Polynomial path: exact image of an even polynomial"""
    _check_dim(p.dim, params)
    return laplacian_with_weight(p, params.a)


def laplacian_with_weight(p: Poly, a: Fraction) -> Poly:
    """Δp + (2a-1) ∂_{n+1}p / x_{n+1} for p even in x_{n+1}, any dimension"""
    if not p.is_even_in_last():
        raise OddParity(f"weighted operator needs an even polynomial in x_{p.dim}, got {p}")
    last = p.dim - 1
    result = Poly.zero(p.dim)
    for axis in range(p.dim):
        result = result + p.partial_derivative(axis).partial_derivative(axis)
    drift = p.partial_derivative(last).divide_by_last()
    return result + drift * (2 * Fraction(a) - 1)


def apply_weighted_laplacian(e: Operand, params: OperatorParams) -> RadialPowerExpr:
    """Exact image of an algebra element that is even in x_{n+1}"""
    if isinstance(e, Poly):
        e = RadialPowerExpr.from_poly(e)
    _check_dim(e.dim, params)
    if not e.is_even_in_last():
        raise OddParity("weighted operator needs an element even in the last variable")
    as_poly = e.as_poly()
    if as_poly is not None:
        return RadialPowerExpr.from_poly(weighted_laplacian_poly(as_poly, params))

    last = e.dim - 1
    result = RadialPowerExpr.zero(e.dim)
    for axis in range(e.dim):
        result = result + e.differentiate(axis).differentiate(axis)
    try:
        drift = e.differentiate(last).divide_by_last_coordinate()
    except NotDivisible as err:
        logger.error(f"Even element failed division by x_{e.dim}: {err}")
        raise
    return result + drift * (2 * params.a - 1)


def apply_power(e: Operand, params: OperatorParams, k: int) -> RadialPowerExpr:
    """(-Ã)^k e by k sequential applications"""
    if k < 0:
        raise ValueError(f"power must be non-negative (got {k})")
    if isinstance(e, Poly):
        e = RadialPowerExpr.from_poly(e)
    result = e.normalize()
    for step in range(k):
        result = -apply_weighted_laplacian(result, params)
        logger.debug(f"(-Ã)^{step + 1}: {len(result.terms)} terms")
    return result


def eigen_factor(t: Fraction, k: int, params: OperatorParams) -> Fraction:
    """λ with Ã(|x|^{t-k} h) = λ |x|^{t-2-k} h for weighted-harmonic h of degree k"""
    t = Fraction(t)
    return t * (t + params.D - 2) - k * (k + params.D - 2)


def apply_A_halfspace(u: HalfSpacePoly, params: OperatorParams) -> HalfSpacePoly:
    """y u_yy + a u_y + Δ_x u"""
    p = u.poly
    if u.n != params.n:
        raise DimensionMismatch(f"half-space polynomial has n={u.n}, operator n={params.n}")
    last = p.dim - 1
    y = Poly.variable(p.dim, last)
    u_y = p.partial_derivative(last)
    result = y * u_y.partial_derivative(last) + u_y * params.a
    for axis in range(last):
        result = result + p.partial_derivative(axis).partial_derivative(axis)
    return HalfSpacePoly(result)


def substitute_parabolic(u: HalfSpacePoly) -> Poly:
    """v(x, x_{n+1}) = u(x, x_{n+1}^2 / 4)"""
    terms = {}
    for m, c in u.poly.items():
        k = m[-1]
        terms[m[:-1] + (2 * k,)] = c / Fraction(4) ** k
    return Poly(u.poly.dim, terms)


def check_vanishing_odd_derivatives(u: HalfSpacePoly, k: int) -> bool:
    """True iff the odd x_{n+1}-derivatives up to order 2k-1 of the substitution vanish at x_{n+1}=0"""
    v = substitute_parabolic(u)
    last = v.dim - 1
    derivative = v.partial_derivative(last)
    for order in range(1, k + 1):
        if not derivative.restrict_last_zero().is_zero:
            logger.debug(f"odd derivative of order {2 * order - 1} survives at x_{v.dim}=0")
            return False
        derivative = derivative.partial_derivative(last).partial_derivative(last)
    return True


def _lift_poly(p: Poly) -> Poly:
    """x_{n+1}^2 -> x_{n+1}^2 + x_{n+2}^2"""
    if not p.is_even_in_last():
        raise OddParity(f"lift needs an even polynomial in x_{p.dim}, got {p}")
    dim = p.dim + 1
    radial_pair = Poly.variable(dim, dim - 2) ** 2 + Poly.variable(dim, dim - 1) ** 2
    result = Poly.zero(dim)
    for m, c in p.items():
        tangential = Poly.monomial(m[:-1] + (0, 0), c)
        result = result + tangential * radial_pair ** (m[-1] // 2)
    return result


def lift_dimension(e: Operand) -> RadialPowerExpr:
    """
    Read an element even in x_{n+1} as a function of (x', sqrt(x_{n+1}^2 + x_{n+2}^2))

    The lifted element intertwines the operator with parameters (n, a) and
    the operator with parameters (n+1, a-1/2).
    """
    if isinstance(e, Poly):
        e = RadialPowerExpr.from_poly(e)
    if not e.is_even_in_last():
        raise OddParity("lift needs an element even in the last variable")
    return e.map_polynomials(_lift_poly, e.dim + 1)


def lifted_params(params: OperatorParams) -> OperatorParams:
    """(n+1, a-1/2, p); the effective dimension is unchanged"""
    return OperatorParams(n=params.n + 1, a=params.a - Fraction(1, 2), p=params.p,
                          allow_small_a=True)
