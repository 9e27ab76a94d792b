"""
Kelvin transform u* = |x|^{2p-n-2a} u(x/|x|^2) and the objects built on it
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np

from src.config import Config
from src.exceptions import DegenerateLevel, InvalidParams, PoorFit
from src.models import CheckResult, OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.tasks.quadrature import WeightedQuadratureGrid, build_weighted_sphere_rule
from src.utils import exact_rational_power
from src.weighted_operator import apply_power, apply_weighted_laplacian

logger = logging.getLogger(__name__)

FIT_SLACK = 0.5


class ChainLevel(NamedTuple):
    i: int
    c: Fraction
    f: RadialPowerExpr


@dataclass
class InversionChain:
    """(c_i, f_i) with (-Ã)^i u* = c_i |x|^{-(n+2a-2p+2i)} f_i(x/|x|^2)"""
    levels: List[ChainLevel] = field(default_factory=list)

    def level(self, i: int) -> ChainLevel:
        return self.levels[i]


@dataclass
class AsymptoticExpansion:
    """e(x) ≈ |x|^{-l} (a_0 + Σ a_i x_i / |x|^2) as |x| -> ∞"""
    order: Fraction
    a0: float
    a: np.ndarray
    residual_order_estimate: float
    radii: List[float] = field(default_factory=list)
    remainders: List[float] = field(default_factory=list)

    @property
    def certifies_positivity(self) -> bool:
        return self.a0 > 0


def _as_expr(u: Union[RadialPowerExpr, Poly]) -> RadialPowerExpr:
    return RadialPowerExpr.from_poly(u) if isinstance(u, Poly) else u


def kelvin_transform(e: Union[RadialPowerExpr, Poly], params: OperatorParams) -> RadialPowerExpr:
    e = _as_expr(e)
    weight = RadialPowerExpr.radial_power(e.dim, params.kelvin_exponent)
    return weight * e.invert()


def kelvin_pde_check(u: Union[RadialPowerExpr, Poly], alpha: Fraction, params: OperatorParams,
                     points: np.ndarray, amplitude: float = 1.0,
                     tolerance: Optional[float] = None) -> CheckResult:
    """
    Max relative residual of (-Ã)^p w - |x|^{-τ} w^α for w = amplitude * u*

    The left side comes from the symbolic image; points should avoid the
    origin and the plane x_{n+1} = 0.
    """
    u = _as_expr(u)
    tolerance = Config.TOLERANCE if tolerance is None else tolerance
    alpha = Fraction(alpha)
    star = kelvin_transform(u, params)
    image = apply_power(star, params, params.p)
    lhs = amplitude * np.asarray(image.evaluate(points), dtype=float)
    values = amplitude * np.asarray(star.evaluate(points), dtype=float)
    radii = np.linalg.norm(points, axis=1)
    rhs = radii ** -float(params.tau(alpha)) * np.sign(values) * np.abs(values) ** float(alpha)
    scale = np.maximum(np.abs(rhs), np.finfo(float).tiny)
    errors = np.where((lhs == 0) & (rhs == 0), 0.0, np.abs(lhs - rhs) / scale)
    residual = float(np.max(errors)) if errors.size else 0.0
    return CheckResult(name="kelvin_pde", passed=residual <= tolerance, residual=residual,
                       details={"alpha": str(alpha), "tau": str(params.tau(alpha)),
                                "points": int(len(points))})


def product_A(m: int, t: Fraction, k: int, params: OperatorParams) -> Fraction:
    """Π_{j<m} [(t-2j)(t-2j+D-2) - k(k+D-2)]"""
    if m < 1:
        raise InvalidParams(f"product needs m >= 1 (got {m})")
    t, D = Fraction(t), params.D
    result = Fraction(1)
    for j in range(m):
        result *= (t - 2 * j) * (t - 2 * j + D - 2) - k * (k + D - 2)
    return result


def product_B(m: int, t: Fraction, k: int, params: OperatorParams) -> Fraction:
    """Π_{j<m} [(2m-D-t-2j)(2m-t-2j-2) - k(k+D-2)]"""
    if m < 1:
        raise InvalidParams(f"product needs m >= 1 (got {m})")
    t, D = Fraction(t), params.D
    result = Fraction(1)
    for j in range(m):
        result *= (2 * m - D - t - 2 * j) * (2 * m - t - 2 * j - 2) - k * (k + D - 2)
    return result


def _value_at_origin(e: RadialPowerExpr) -> Union[Fraction, float]:
    """Exact when every base power at 0 is rational"""
    origin = [0] * e.dim
    total = Fraction(0)
    for term in e.normalize().terms:
        value = term.coeff_poly.evaluate_exact(origin)
        for f in term.factors:
            power = exact_rational_power(f.base.evaluate_exact(origin), f.exponent)
            if power is None:
                return float(e.evaluate(np.zeros(e.dim)))
            value *= power
        total += value
    return total


def inversion_chain(u: Union[RadialPowerExpr, Poly], params: OperatorParams,
                    levels: Optional[int] = None) -> InversionChain:
    """
    c_0 = 1, f_0 = u and, while i+1 <= p-1, with κ_i = (2p-2i-2)(D-2p+2i):

        c_{i+1} = κ_i c_i
        κ_i f_{i+1} = κ_i f_i + 4(p-i-1) x.∇f_i - |x|^2 Ã f_i
    """
    u = _as_expr(u)
    levels = params.p if levels is None else levels
    if levels > params.p:
        raise DegenerateLevel(
            f"the chain stops at level p-1={params.p - 1}; {levels - 1} was requested")
    if not u.is_even_in_last():
        raise InvalidParams("inversion chain needs u even in the last variable")

    r2 = Poly.norm_squared(u.dim)
    u0 = _value_at_origin(u)
    chain = InversionChain(levels=[ChainLevel(0, Fraction(1), u)])
    for i in range(levels - 1):
        _, c, f = chain.levels[-1]
        kappa = (2 * params.p - 2 * i - 2) * (params.D - 2 * params.p + 2 * i)
        update = f.euler() * (4 * (params.p - i - 1)) - apply_weighted_laplacian(f, params) * r2
        f_next = f + update / kappa
        chain.levels.append(ChainLevel(i + 1, kappa * c, f_next))

        value = _value_at_origin(f_next)
        if isinstance(value, Fraction) and isinstance(u0, Fraction):
            consistent = value == u0
        else:
            consistent = math.isclose(float(value), float(u0), rel_tol=1e-12, abs_tol=1e-14)
        if not consistent:
            logger.error(f"f_{i + 1}(0) = {value} differs from u(0) = {u0}")
            raise DegenerateLevel(f"f_{i + 1}(0) = {value} differs from u(0) = {u0}")
    return chain


def chain_level_expression(chain: InversionChain, i: int, params: OperatorParams) -> RadialPowerExpr:
    """c_i |x|^{-(n+2a-2p+2i)} f_i(x/|x|^2)"""
    _, c, f = chain.level(i)
    dim = f.dim
    weight = RadialPowerExpr.radial_power(dim, -(params.D - 2 * params.p + 2 * i), c)
    return weight * f.invert()


def verify_chain(u: Union[RadialPowerExpr, Poly], chain: InversionChain,
                 params: OperatorParams) -> bool:
    """Canonical equality of (-Ã)^i u* with every chain level"""
    current = kelvin_transform(u, params)
    for level in chain.levels:
        if current != chain_level_expression(chain, level.i, params):
            logger.error(f"chain level {level.i} does not match (-Ã)^{level.i} u*")
            return False
        current = apply_power(current, params, 1)
    return True


def asymptotic_fit(e: Union[RadialPowerExpr, Poly], l: Fraction, radii: Sequence[float],
                   params: OperatorParams, grid: Optional[WeightedQuadratureGrid] = None
                   ) -> AsymptoticExpansion:
    """
    Fit e(x) ≈ |x|^{-l}(a_0 + Σ a_i x_i/|x|^2) on spheres of the given radii

    On each sphere g = R^l e(Rθ); a_0 is its weighted average and a_i comes
    from the first moments. Both are Richardson-extrapolated in 1/R^2 over
    the two largest radii. The remainder order is l minus the log-log
    slope of max|g - a_0 - a.θ/R| in R.
    """
    e = _as_expr(e)
    radii = sorted(float(r) for r in radii)
    if len(radii) < 2 or radii[0] < 10:
        raise InvalidParams("asymptotic fit needs at least two radii, all >= 10")
    grid = build_weighted_sphere_rule(params) if grid is None else grid
    theta, weights = grid.nodes, grid.weights
    omega = grid.omega
    second_moments = theta.T ** 2 @ weights

    l = Fraction(l)
    samples = []
    a0_values, a_values = [], []
    for R in radii:
        g = R ** float(l) * np.asarray(e.evaluate(R * theta), dtype=float)
        samples.append(g)
        a0_values.append(float(weights @ g) / omega)
        a_values.append(R * (theta.T * weights) @ g / second_moments)

    (R1, R2), (g1, g2) = radii[-2:], a0_values[-2:]
    a0 = (R2 ** 2 * g2 - R1 ** 2 * g1) / (R2 ** 2 - R1 ** 2)
    a = (R2 ** 2 * a_values[-1] - R1 ** 2 * a_values[-2]) / (R2 ** 2 - R1 ** 2)

    remainders = []
    for R, g in zip(radii, samples):
        remainders.append(float(np.max(np.abs(g - a0 - theta @ a / R))))
    scale = max(1.0, float(np.max(np.abs(samples[-1]))))
    floor = 1e3 * np.finfo(float).eps * scale
    if max(remainders) <= floor:
        order = math.inf
    else:
        usable = [(R, rem) for R, rem in zip(radii, remainders) if rem > floor]
        if len(usable) < 2:
            order = math.inf
        else:
            slope = np.polyfit(np.log([R for R, _ in usable]),
                               np.log([rem for _, rem in usable]), 1)[0]
            order = float(l) - float(slope)

    expansion = AsymptoticExpansion(order=l, a0=float(a0), a=np.asarray(a, dtype=float),
                                    residual_order_estimate=order, radii=radii,
                                    remainders=remainders)
    if order < float(l) + 2 - FIT_SLACK:
        logger.error(f"remainder decays at order {order:.4g}, expected >= {float(l) + 2}")
        raise PoorFit(f"remainder order {order:.4g} below {float(l) + 2 - FIT_SLACK}")
    return expansion
