"""
Bubble solutions, the growth recursions of the blow-up argument, and
numeric checks of the radial monotonicity and positivity statements
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import Config
from src.exceptions import InvalidParams, MalformedInput, NonconstantRemainder, OracleMismatch, PremiseViolated
from src.models import CheckResult, OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.radial_oracle import radial_oracle_constant
from src.utils import chunked, make_rng, parallel_map, sample_ball
from src.weighted_operator import apply_power

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BubbleConstant:
    """K with (-Ã)^p (1+|X|^2)^{-s} = K (1+|X|^2)^{-s-2p}, and c_0 = K^{s/(2p)}"""
    K: Fraction
    K_oracle: Fraction
    exponent: Fraction
    c0: float
    residual: Optional[float] = None

    @property
    def matches_oracle(self) -> bool:
        return self.K == self.K_oracle


@dataclass(frozen=True, eq=False)
class BubbleSolution:
    """c_0 (t / (t^2 + |X - (x_0, 0)|^2))^s with s = (n+2a-2p)/2"""
    t: Fraction
    x0: Tuple[Fraction, ...]
    params: OperatorParams
    c0: float
    profile: RadialPowerExpr

    @property
    def s(self) -> Fraction:
        return self.params.s

    @property
    def amplitude(self) -> float:
        """c_0 t^s; the solution is amplitude * profile"""
        return self.c0 * float(self.t) ** float(self.s)

    def evaluate(self, points) -> Union[float, np.ndarray]:
        return self.amplitude * self.profile.evaluate(points)

    def evaluate_halfspace(self, x, y) -> Union[float, np.ndarray]:
        """c_0 (t / (t^2 + 4y + |x - x_0|^2))^s on the half-space"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.asarray(y, dtype=float)
        t = float(self.t)
        shift = np.asarray([float(v) for v in self.x0])
        denominator = t ** 2 + 4 * y + np.sum((x - shift) ** 2, axis=1)
        values = self.c0 * (t / denominator) ** float(self.s)
        return float(values[0]) if values.size == 1 and np.ndim(y) == 0 else values


@dataclass
class GrowthTrace:
    p: int
    alpha: Fraction
    k_max: int
    sigma: List[Fraction]
    b: List[Fraction]
    r: List[float]
    A_const: Optional[Fraction]
    sigma_closed: List[Fraction] = field(default_factory=list)
    b_closed: List[Fraction] = field(default_factory=list)
    c_bound: float = 0.0

    @property
    def closed_forms_match(self) -> bool:
        return self.sigma == self.sigma_closed and self.b == self.b_closed

    @property
    def r_bounded(self) -> bool:
        r0 = self.r[0]
        monotone = all(x <= y for x, y in zip(self.r, self.r[1:]))
        return monotone and all(r <= self.c_bound * r0 * (1 + 1e-12) for r in self.r)


def _check_params_for_bubble(params: OperatorParams) -> None:
    if not params.s > 0:
        raise InvalidParams(f"bubble needs n+2a-2p > 0 ({params.label()})")


def bubble_profile(params: OperatorParams, t: Fraction,
                    x0: Sequence[Fraction] = ()) -> RadialPowerExpr:
    center = list(x0) + [0] * (params.dim - len(x0))
    base = Poly.shifted_quadratic(Fraction(t) ** 2, center)
    return RadialPowerExpr.power(base, -params.s)


@lru_cache(maxsize=32)
def _symbolic_constant(params: OperatorParams, t: Fraction) -> Fraction:
    """K(t) read off the symbolic image of (t^2+|X|^2)^{-s}"""
    base = Poly.shifted_quadratic(t ** 2, [0] * params.dim)
    image = apply_power(RadialPowerExpr.power(base, -params.s), params, params.p)
    remainder = (image * RadialPowerExpr.power(base, params.s + 2 * params.p)).as_poly()
    if remainder is None or not remainder.is_constant:
        logger.error(f"(-Ã)^p bubble / bubble^(alpha) = {remainder} is not constant")
        raise NonconstantRemainder(
            f"image of the bubble is not a constant multiple of the expected power ({params.label()})")
    return remainder.constant_term


def verify_bubble_constant(params: OperatorParams, t: Fraction = Fraction(1),
                           samples: Optional[int] = None, seed: Optional[int] = None,
                           radius: float = 10.0) -> BubbleConstant:
    """
    Extract K symbolically, insist that the radial oracle agrees, and measure
    the pointwise residual of (-Ã)^p w = w^α at sample points for
    w = c_0 (1+|X|^2)^{-s}
    """
    _check_params_for_bubble(params)
    t = Fraction(t)
    K_t = _symbolic_constant(params, t)
    K = K_t / t ** (2 * params.p)
    K_oracle = radial_oracle_constant(params, t) / t ** (2 * params.p)
    if K != K_oracle:
        logger.error(f"symbolic K={K} disagrees with radial oracle K={K_oracle}")
        raise OracleMismatch(f"bubble constant K={K} disagrees with the radial oracle K={K_oracle} "
                             f"({params.label()}, t={t})")
    exponent = params.s / (2 * params.p)
    c0 = float(K) ** float(exponent)

    residual = None
    if samples:
        rng = make_rng(seed)
        points = sample_ball(rng, samples, params.dim, radius)
        profile = bubble_profile(params, Fraction(1))
        image = apply_power(profile, params, params.p)
        alpha = float(params.alpha_crit)
        lhs = c0 * np.asarray(image.evaluate(points))
        rhs = (c0 * np.asarray(profile.evaluate(points))) ** alpha
        residual = float(np.max(np.abs(lhs - rhs) / rhs))
        logger.info(f"bubble PDE residual over {samples} points: {residual:.3e}")
    return BubbleConstant(K=K, K_oracle=K_oracle, exponent=exponent, c0=c0, residual=residual)


def make_bubble(t: Union[Fraction, int, str], x0: Sequence, params: OperatorParams) -> BubbleSolution:
    t = Fraction(t)
    if not t > 0:
        raise InvalidParams(f"bubble scale t must be positive (got {t})")
    if len(x0) != params.n:
        raise InvalidParams(f"x0 must have {params.n} coordinates (got {len(x0)})")
    _check_params_for_bubble(params)
    x0 = tuple(Fraction(v) for v in x0)
    constant = verify_bubble_constant(params)
    return BubbleSolution(t=t, x0=x0, params=params, c0=constant.c0,
                          profile=bubble_profile(params, t, x0))


# growth recursions


def growth_sequences(p: int, alpha: Union[Fraction, str, int], r0: float = 1.0,
                     k_max: int = 30, D: Optional[Fraction] = None) -> GrowthTrace:
    """
    σ_0 = 2(p-1), σ_{k+1} = ασ_k + 2p; b_0 = 0, b_{k+1} = αb_k + 2p(k+1);
    r_{k+1} = 2^{2p/(ασ_k+1)} r_k; A = 2α(p-1) + D + 2p
    """
    alpha = Fraction(alpha)
    if not alpha > 1:
        raise InvalidParams(f"growth recursion needs alpha > 1 (got {alpha})")
    if not 0 <= k_max <= 64:
        raise InvalidParams(f"k_max must lie in 0..64 (got {k_max})")
    if p < 1:
        raise InvalidParams(f"p must be >= 1 (got {p})")

    sigma = [Fraction(2 * (p - 1))]
    b = [Fraction(0)]
    r = [float(r0)]
    for k in range(k_max):
        r.append(2.0 ** (2 * p / float(alpha * sigma[k] + 1)) * r[k])
        sigma.append(alpha * sigma[k] + 2 * p)
        b.append(alpha * b[k] + 2 * p * (k + 1))

    sigma_closed, b_closed = [], []
    for k in range(k_max + 1):
        power = alpha ** k
        sigma_closed.append(2 * (p - 1) * power + 2 * p * (power - 1) / (alpha - 1))
        b_closed.append(2 * p * (alpha * (power - 1) / (alpha - 1) ** 2 - Fraction(k) / (alpha - 1)))

    # Σ_k 2p/(ασ_k+1) converges geometrically; sum until the terms vanish in floating point
    exponent_sum, s_k, k = 0.0, float(sigma[0]), 0
    while True:
        term = 2 * p / (float(alpha) * s_k + 1)
        exponent_sum += term
        s_k = float(alpha) * s_k + 2 * p
        k += 1
        if term < 1e-17 * exponent_sum or k > 10_000:
            break

    A_const = None if D is None else 2 * alpha * (p - 1) + Fraction(D) + 2 * p
    return GrowthTrace(p=p, alpha=alpha, k_max=k_max, sigma=sigma, b=b, r=r, A_const=A_const,
                       sigma_closed=sigma_closed, b_closed=b_closed, c_bound=2.0 ** exponent_sum)


def blow_up_trace(trace: GrowthTrace, c0: float, r0: float) -> Tuple[float, List[float]]:
    """
    r̄ = max(2 A^{2pα/(α-1)^2} / c_0, c r_0) and log(c_0^{α^k} r̄^{σ_k} / A^{b_k}) for each k

    The values grow without bound; the sequence is reported, not asserted.
    """
    if trace.A_const is None:
        raise InvalidParams("blow-up trace needs the growth trace built with n+2a")
    alpha = float(trace.alpha)
    A = float(trace.A_const)
    if not (c0 > 0 and A > 0):
        raise InvalidParams(f"blow-up trace needs c0 > 0 and A > 0 (got {c0}, {A})")
    log_floor = math.log(2) + 2 * trace.p * alpha / (alpha - 1) ** 2 * math.log(A) - math.log(c0)
    r_bar = max(math.exp(log_floor), trace.c_bound * r0)
    values = [alpha ** k * math.log(c0) + float(sigma) * math.log(r_bar) - float(b) * math.log(A)
              for k, (sigma, b) in enumerate(zip(trace.sigma, trace.b))]
    return r_bar, values


# numeric checks


def _check_radial(f: RadialPowerExpr, radii: Sequence[float], seed: Optional[int] = None) -> None:
    rng = make_rng(seed)
    directions = rng.standard_normal((8, f.dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    for r in radii[:: max(1, len(radii) // 5)]:
        values = np.asarray(f.evaluate(r * directions))
        reference = f.evaluate(r * np.eye(f.dim)[0])
        if np.max(np.abs(values - reference)) > 1e-9 * max(1.0, abs(reference)):
            raise MalformedInput(f"function is not radial (spread at r={r:.4g})")


def radial_monotonicity_check(f: Union[RadialPowerExpr, Poly], params: OperatorParams,
                              radii: Sequence[float], premise_tolerance: float = 1e-12
                              ) -> CheckResult:
    """
    With (-Ã)^k f >= 0 for k = 0..p on the grid, report min of
    -d/dr [r f'(r) + (n+2a-2p) f(r)]; the check passes when it is positive
    """
    if isinstance(f, Poly):
        f = RadialPowerExpr.from_poly(f)
    radii = np.asarray(sorted(float(r) for r in radii if r > 0))
    _check_radial(f, radii)
    axis_points = radii[:, None] * np.eye(f.dim)[0][None, :]

    for k in range(params.p + 1):
        values = np.asarray(apply_power(f, params, k).evaluate(axis_points))
        scale = max(1.0, float(np.max(np.abs(values))))
        bad = np.flatnonzero(values < -premise_tolerance * scale)
        if bad.size:
            j = int(bad[0])
            logger.error(f"premise (-Ã)^{k} f >= 0 fails at r={radii[j]:.6g}")
            raise PremiseViolated(k, float(radii[j]), float(values[j]))

    # r f' = x.∇f on the ray
    g = f.euler() + f * (params.D - 2 * params.p)
    derivative = np.asarray(g.euler().evaluate(axis_points)) / radii
    quantity = -derivative
    minimum = float(np.min(quantity))
    boundary_case = bool(np.all(quantity == 0))
    return CheckResult(name="radial_monotonicity", passed=minimum > 0, residual=minimum,
                       details={"min_value": minimum, "boundary_case": boundary_case,
                                "r_min": float(radii[0]), "r_max": float(radii[-1])})


def positivity_scan(u: Union[RadialPowerExpr, Poly], params: OperatorParams, points: np.ndarray,
                    amplitude: float = 1.0) -> CheckResult:
    """Sign of (-Ã)^i u at every point for i = 1..p-1"""
    if isinstance(u, Poly):
        u = RadialPowerExpr.from_poly(u)
    chunks = chunked(np.asarray(points, dtype=float), Config.thread_cap())
    levels = []
    failures = 0
    for i in range(1, params.p):
        image = apply_power(u, params, i)
        values = np.concatenate(parallel_map(lambda chunk: np.asarray(image.evaluate(chunk)), chunks))
        values = amplitude * values
        non_positive = int(np.count_nonzero(values <= 0))
        failures += non_positive
        levels.append({"i": i, "min_value": float(np.min(values)), "non_positive": non_positive})
        if non_positive:
            logger.warning(f"(-Ã)^{i} u is non-positive at {non_positive} of {len(values)} points")
    return CheckResult(name="positivity_scan", passed=failures == 0,
                       residual=float(min((lvl["min_value"] for lvl in levels), default=0.0)),
                       details={"levels": levels, "points": int(len(points))})
