"""
Integration against |x_{n+1}|^{2a-1} on spheres and balls

The weighted sphere rule is a product rule: the last coordinate s carries
the one-dimensional weight |s|^{2a-1}(1-s^2)^{(n-2)/2}, handled through
u = s^2 as a Gauss-Jacobi rule on [0, 1], and the remaining directions
use an unweighted rule on S^{n-1} built the same way recursively. Ball
integrals are radial integrals of sphere averages over log-spaced
Gauss-Legendre panels.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln, gammaln, roots_jacobi

from src.config import Config
from src.exceptions import Inconclusive, InvalidParams, NonConvergentLimit, SingularEvaluation, SingularSystem
from src.models import CheckResult, OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.utils import pairwise_sum, parallel_map
from src.weighted_operator import apply_power

logger = logging.getLogger(__name__)

Integrand = Union[RadialPowerExpr, Poly, Callable[[np.ndarray], np.ndarray]]

MOMENT_TOLERANCE = 1e-12
RATIO_SPREAD = 0.02


@dataclass(frozen=True, eq=False)
class WeightedQuadratureGrid:
    """Nodes on the unit sphere S^n with weights for |θ_{n+1}|^{2a-1} dS"""
    params: OperatorParams
    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    polar_nodes: np.ndarray
    polar_weights: np.ndarray
    method: str

    @property
    def omega(self) -> float:
        return pairwise_sum(self.weights)

    def integrate(self, values: np.ndarray) -> float:
        return pairwise_sum(self.weights * np.asarray(values, dtype=float))


@dataclass
class DivergenceLevel:
    i: int
    boundary: float
    interior: float
    interior_order: float
    refinement_slope: Optional[float] = None

    @property
    def residual(self) -> float:
        return self.boundary + self.interior

    @property
    def beta(self) -> float:
        return self.boundary + self.interior


@dataclass
class DivergenceReport:
    levels: List[DivergenceLevel]
    tolerance: float
    precondition: Optional["IntegrabilityReport"] = None

    def level_passed(self, level: DivergenceLevel) -> bool:
        scale = abs(level.boundary) + abs(level.interior) + 1.0
        return abs(level.residual) <= self.tolerance * scale

    @property
    def passed(self) -> bool:
        return all(self.level_passed(level) for level in self.levels)

    def to_check(self, name: str = "divergence_identity") -> CheckResult:
        residual = max((abs(level.residual) for level in self.levels), default=0.0)
        return CheckResult(
            name=name, passed=self.passed, residual=residual,
            details={
                "levels": [
                    {"i": level.i, "boundary": level.boundary, "interior": level.interior,
                     "residual": level.residual, "beta": level.beta,
                     "interior_order": level.interior_order,
                     "refinement_slope": level.refinement_slope,
                     "passed": self.level_passed(level)}
                    for level in self.levels
                ],
                "precondition": self.precondition.to_details() if self.precondition else None,
            })


@dataclass
class IntegrabilityReport:
    integrable: bool
    value: Optional[float]
    growth_exponent: Optional[float]
    shell_ratios: List[float] = field(default_factory=list)

    def to_details(self) -> dict:
        return {"integrable": self.integrable, "value": self.value,
                "growth_exponent": self.growth_exponent, "shell_ratios": self.shell_ratios}

    def to_check(self, name: str = "l1_singularity") -> CheckResult:
        return CheckResult(name=name, passed=self.integrable, residual=None,
                           details=self.to_details())


# closed forms


def closed_form_moment(params: OperatorParams, m: int) -> float:
    """∫_{S^n} |x_{n+1}|^{2a-1+2m} dS = 2 π^{n/2} Γ(a+m) / Γ(a+m+n/2)"""
    a = float(params.a)
    half_n = params.n / 2
    return math.exp(math.log(2.0) + half_n * math.log(math.pi)
                    + gammaln(a + m) - gammaln(a + m + half_n))


def omega_a(params: OperatorParams) -> float:
    return closed_form_moment(params, 0)


# one-dimensional rules


def _polar_moment(a: Fraction, beta: Fraction, j: int) -> float:
    """∫_0^1 u^{a-1+j} (1-u)^beta du"""
    return math.exp(betaln(float(a) + j, float(beta) + 1))


def _jacobi_rule(a: Fraction, beta: Fraction, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss rule for u^{a-1}(1-u)^beta on [0, 1] from scipy's Gauss-Jacobi nodes"""
    x, w = roots_jacobi(points, float(beta), float(a) - 1)
    scale = 2.0 ** -(float(a) + float(beta))
    return (1 + x) / 2, w * scale


def _exact_moment_rule(a: Fraction, beta: Fraction, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Same rule from exact rational moments

    The Chebyshev algorithm runs over Fractions (moment ratios are rational),
    then Golub-Welsch turns the recurrence into nodes and weights.
    """
    moments = [Fraction(1)]
    for j in range(2 * points - 1):
        moments.append(moments[-1] * (a + j) / (a + j + beta + 1))

    alpha = [moments[1] / moments[0]]
    beta_rec = [moments[0]]
    sigma_prev = [Fraction(0)] * (2 * points)
    sigma = list(moments)
    for k in range(1, points):
        sigma_next = [Fraction(0)] * (2 * points)
        for l in range(k, 2 * points - k):
            sigma_next[l] = (sigma[l + 1] - alpha[k - 1] * sigma[l]
                             - beta_rec[k - 1] * sigma_prev[l])
        if sigma_next[k] == 0:
            raise SingularSystem(f"moment recurrence broke down at step {k}")
        alpha.append(sigma_next[k + 1] / sigma_next[k] - sigma[k] / sigma[k - 1])
        beta_rec.append(sigma_next[k] / sigma[k - 1])
        sigma_prev, sigma = sigma, sigma_next

    diagonal = np.array([float(v) for v in alpha])
    off_diagonal = np.sqrt(np.array([float(v) for v in beta_rec[1:]]))
    nodes, vectors = eigh_tridiagonal(diagonal, off_diagonal)
    weights = _polar_moment(a, beta, 0) * vectors[0, :] ** 2
    return nodes, weights


def _certify(nodes: np.ndarray, weights: np.ndarray, a: Fraction, beta: Fraction) -> bool:
    for j in range(2 * len(nodes)):
        exact = _polar_moment(a, beta, j)
        approx = float(np.dot(weights, nodes ** j))
        if abs(approx - exact) > MOMENT_TOLERANCE * exact:
            logger.debug(f"moment {j} off: {approx!r} vs {exact!r}")
            return False
    return True


@lru_cache(maxsize=64)
def polar_rule(a: Fraction, beta: Fraction, points: int) -> Tuple[np.ndarray, np.ndarray, str]:
    """
    Symmetric rule on [-1, 1] for |s|^{2a-1}(1-s^2)^beta

    Nodes ±sqrt(u_j) carry half of the [0, 1] weight each, so even
    polynomials of degree <= 4*points-2 and all odd ones are exact.
    """
    nodes, weights = _jacobi_rule(a, beta, points)
    method = "gauss-jacobi"
    if not _certify(nodes, weights, a, beta):
        logger.warning(f"Gauss-Jacobi rule failed moment certification (a={a}, beta={beta}), "
                       f"rebuilding from exact moments")
        nodes, weights = _exact_moment_rule(a, beta, points)
        method = "exact-moments"
        if not _certify(nodes, weights, a, beta):
            logger.error(f"exact-moment rule failed certification (a={a}, beta={beta})")
            raise SingularSystem(f"no certified polar rule for a={a}, beta={beta}")
    s = np.sqrt(nodes)
    return np.concatenate([-s[::-1], s]), np.concatenate([weights[::-1], weights]) / 2, method


def _sphere_rule(k: int, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Unweighted product rule on S^k in R^{k+1}"""
    if k == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    s, w, _ = polar_rule(Fraction(1, 2), Fraction(k - 2, 2), points)
    inner_nodes, inner_weights = _sphere_rule(k - 1, points)
    return _combine(s, w, inner_nodes, inner_weights)


def _combine(s: np.ndarray, w: np.ndarray, inner_nodes: np.ndarray,
             inner_weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    radius = np.sqrt(np.clip(1 - s ** 2, 0.0, None))
    nodes = np.concatenate([
        np.hstack([radius[j] * inner_nodes, np.full((inner_nodes.shape[0], 1), s[j])])
        for j in range(len(s))
    ])
    weights = np.concatenate([w[j] * inner_weights for j in range(len(s))])
    return nodes, weights


def build_weighted_sphere_rule(params: OperatorParams, degree: Optional[int] = None
                               ) -> WeightedQuadratureGrid:
    """Product rule on S^n for |θ_{n+1}|^{2a-1} dS, exact for polynomials of the declared degree"""
    degree = Config.QUADRATURE_DEGREE if degree is None else degree
    if degree < 1:
        raise InvalidParams(f"quadrature degree must be >= 1 (got {degree})")
    points = degree // 4 + 1
    s, w, method = polar_rule(params.a, Fraction(params.n - 2, 2), points)
    inner_nodes, inner_weights = _sphere_rule(params.n - 1, points)
    nodes, weights = _combine(s, w, inner_nodes, inner_weights)

    for m in range(degree // 2 + 1):
        exact = closed_form_moment(params, m)
        approx = float(np.dot(weights, np.abs(nodes[:, -1]) ** (2 * m)))
        if abs(approx - exact) > MOMENT_TOLERANCE * exact:
            logger.error(f"sphere rule moment {m} off: {approx!r} vs {exact!r}")
            raise SingularSystem(f"weighted sphere rule failed moment {m} for {params.label()}")

    logger.debug(f"weighted sphere rule for {params.label()}: {len(weights)} nodes ({method})")
    return WeightedQuadratureGrid(params=params, degree=degree, nodes=nodes, weights=weights,
                                  polar_nodes=s, polar_weights=w, method=method)


# averages and shells


def _values(e: Integrand, points: np.ndarray) -> np.ndarray:
    if isinstance(e, (RadialPowerExpr, Poly)):
        return np.asarray(e.evaluate(points), dtype=float)
    return np.asarray(e(points), dtype=float)


def weighted_average_z(e: Integrand, r: float, grid: WeightedQuadratureGrid) -> float:
    """r^{-(n+2a-1)} ∫_{∂B_r} |x_{n+1}|^{2a-1} e dS"""
    return grid.integrate(_values(e, r * grid.nodes))


def _shell(e: Integrand, grid: WeightedQuadratureGrid, lo: float, hi: float, order: int) -> float:
    """∫_{B_hi \\ B_lo} |x_{n+1}|^{2a-1} e dx on one log-spaced Gauss-Legendre panel"""
    t, tw = np.polynomial.legendre.leggauss(order)
    log_lo, log_hi = math.log(lo), math.log(hi)
    radii = np.exp(log_lo + (t + 1) * (log_hi - log_lo) / 2)
    tw = tw * (log_hi - log_lo) / 2
    M = grid.nodes.shape[0]
    points = (radii[:, None, None] * grid.nodes[None, :, :]).reshape(-1, grid.nodes.shape[1])
    values = _values(e, points).reshape(len(radii), M)
    averages = values @ grid.weights
    D = float(grid.params.D)
    return pairwise_sum(tw * radii ** D * averages)


def shrink_radii(outer: float = 1.0, start: Optional[float] = None,
                 levels: Optional[int] = None) -> np.ndarray:
    start = Config.SHRINK_START if start is None else start
    levels = Config.SHRINK_LEVELS if levels is None else levels
    return outer * start * 2.0 ** -np.arange(levels)


def shell_integrals(e: Integrand, grid: WeightedQuadratureGrid, outer: float = 1.0,
                    radii: Optional[np.ndarray] = None, order: Optional[int] = None) -> np.ndarray:
    """Panel integrals over [radii[0], outer], [radii[1], radii[0]], ..."""
    radii = shrink_radii(outer) if radii is None else np.asarray(radii, dtype=float)
    order = Config.RADIAL_ORDER if order is None else order
    edges = np.concatenate([[outer], radii])
    panels = [(edges[k + 1], edges[k]) for k in range(len(radii))]
    return np.array(parallel_map(lambda panel: _shell(e, grid, panel[0], panel[1], order), panels))


def integrate_ball_shells(e: Integrand, params: OperatorParams, grid: WeightedQuadratureGrid,
                          outer: float = 1.0, radii: Optional[np.ndarray] = None,
                          order: Optional[int] = None) -> np.ndarray:
    """Cumulative ∫_{B_outer \\ B_{s_k}} |x_{n+1}|^{2a-1} e dx for the shrinking radii s_k"""
    if grid.params.dim != params.dim:
        raise InvalidParams(f"grid built for {grid.params.label()}, integrand for {params.label()}")
    return np.cumsum(shell_integrals(e, grid, outer, radii, order))


def richardson_limit(values: Sequence[float], ratio: float = 2.0) -> Tuple[float, float]:
    """
    Limit of a sequence with a geometric tail, and the estimated order

    Successive differences d_k are assumed to shrink like ratio^{-order};
    the order is read off the last two difference ratios and the tail
    summed in closed form (Aitken). A sequence that has already settled
    to rounding level returns its last value with order inf.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise NonConvergentLimit("need at least two values to extrapolate")
    d = np.diff(v)
    noise = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(v))))
    if abs(d[-1]) <= noise:
        return float(v[-1]), math.inf
    if d.size < 3 or np.any(np.abs(d[-3:]) <= noise):
        raise NonConvergentLimit(f"too few significant differences in {v.tolist()}")

    q_last = d[-1] / d[-2]
    q_prev = d[-2] / d[-3]
    if abs(q_last - q_prev) > RATIO_SPREAD * max(1.0, abs(q_last)) or not abs(q_last) < 1:
        logger.error(f"extrapolation unstable: difference ratios {q_prev:.6g}, {q_last:.6g}")
        raise NonConvergentLimit(
            f"difference ratios {q_prev:.6g}, {q_last:.6g} do not settle below 1")
    limit = float(v[-1] + d[-1] * q_last / (1 - q_last))
    order = -math.log(abs(q_last)) / math.log(ratio)
    return limit, order


def refinement_slope(residuals: Sequence[float], radii: Sequence[float],
                     scale: float = 1.0) -> Optional[float]:
    """
    Log-log slope of |residual_k| against s_k

    Residuals within 1e3 ulps of the scale are rounding noise and dropped;
    fewer than three significant points give None.
    """
    residuals = np.abs(np.asarray(residuals, dtype=float))
    radii = np.asarray(radii, dtype=float)
    floor = 1e3 * np.finfo(float).eps * max(1.0, scale)
    keep = residuals > floor
    if np.count_nonzero(keep) < 3:
        return None
    slope, _ = np.polyfit(np.log(radii[keep]), np.log(residuals[keep]), 1)
    return float(slope)


# identity checks


def _singular_at_origin(e: RadialPowerExpr) -> bool:
    try:
        value = e.evaluate(np.zeros(e.dim))
    except SingularEvaluation:
        return True
    return not math.isfinite(value)


def _as_expr(u: Union[RadialPowerExpr, Poly]) -> RadialPowerExpr:
    return RadialPowerExpr.from_poly(u) if isinstance(u, Poly) else u


def _boundary_flux(w: RadialPowerExpr, grid: WeightedQuadratureGrid) -> float:
    """∫_{∂B_1} |x_{n+1}|^{2a-1} ∂_r w dS"""
    return grid.integrate(w.euler().evaluate(grid.nodes))


def _interior_limit(w: RadialPowerExpr, params: OperatorParams,
                    grid: WeightedQuadratureGrid) -> Tuple[float, float]:
    return richardson_limit(integrate_ball_shells(w, params, grid))


def divergence_identity_check(u: Union[RadialPowerExpr, Poly], params: OperatorParams,
                              grid: WeightedQuadratureGrid, tolerance: Optional[float] = None,
                              alpha: Optional[Fraction] = None) -> DivergenceReport:
    """
    Per level i < p: ∫_{∂B_1}[∂_r v_i - (2a-1) v_i] dS + lim ∫_{B_1 \\ B_s} v_{i+1} dx

    with v_i = |x_{n+1}|^{2a-1} (-Ã)^i u. On the unit sphere the bracket is
    |x_{n+1}|^{2a-1} ∂_r (-Ã)^i u. Each level also records the log-log
    slope of the truncated residual against the inner radius s.
    """
    u = _as_expr(u)
    tolerance = Config.TOLERANCE if tolerance is None else tolerance
    precondition = None
    if _singular_at_origin(u):
        alpha = params.alpha_crit if alpha is None else Fraction(alpha)
        precondition = l1_singularity_check(u, params.tau(alpha), params, grid, alpha=alpha)

    levels = []
    radii = shrink_radii()
    w = u
    for i in range(params.p):
        w_next = apply_power(w, params, 1)
        boundary = _boundary_flux(w, grid)
        cumulative = integrate_ball_shells(w_next, params, grid, radii=radii)
        interior, order = richardson_limit(cumulative)
        # boundary + ∫_{B_1 \ B_s} v_{i+1} = -∫_{B_s} v_{i+1}
        slope = refinement_slope(boundary + cumulative, radii, abs(boundary) + abs(interior))
        levels.append(DivergenceLevel(i=i, boundary=boundary, interior=interior,
                                      interior_order=order, refinement_slope=slope))
        logger.info(f"level {i}: boundary {boundary:.12g}, interior {interior:.12g}, "
                    f"refinement slope {slope}")
        w = w_next
    return DivergenceReport(levels=levels, tolerance=tolerance, precondition=precondition)


def average_law_check(u: Union[RadialPowerExpr, Poly], i: int, params: OperatorParams,
                      grid: WeightedQuadratureGrid, radii: Optional[Sequence[float]] = None,
                      tolerance: float = 1e-6) -> CheckResult:
    """r^{n-1} v̄_i(r) -> -β_i/(n+2a-2) as r -> 0, with v̄_i(r) = r^{-n} ∫_{∂B_r} v_i dS"""
    u = _as_expr(u)
    D = float(params.D)
    if not D > 2:
        raise InvalidParams(f"average law needs n+2a > 2 ({params.label()})")
    radii = shrink_radii() if radii is None else np.asarray(radii, dtype=float)
    w = apply_power(u, params, i)

    # r^{n-1} v̄_i(r) = r^{D-2} z_i(r)
    profile = [r ** (D - 2) * weighted_average_z(w, r, grid) for r in radii]
    fitted, fit_order = richardson_limit(profile)
    boundary = _boundary_flux(w, grid)
    interior, _ = _interior_limit(apply_power(w, params, 1), params, grid)
    beta = boundary + interior
    predicted = -beta / (D - 2)
    residual = abs(fitted - predicted)
    passed = residual <= tolerance * max(1.0, abs(predicted))
    return CheckResult(
        name=f"average_law_i{i}", passed=passed, residual=residual,
        details={"fitted": fitted, "fit_order": fit_order, "beta": beta,
                 "predicted": predicted, "boundary": boundary, "interior": interior,
                 "profile": profile})


def jensen_weighted_check(u: Union[RadialPowerExpr, Poly], alpha: Fraction, rho: float,
                          grid: WeightedQuadratureGrid) -> CheckResult:
    """∫_{∂B_ρ} |x_{n+1}|^{2a-1} u^α dS >= ρ^{n+2a-1} ω_a^{1-α} z(ρ)^α"""
    u = _as_expr(u)
    alpha = float(alpha)
    values = _values(u, rho * grid.nodes)
    if np.any(values <= 0):
        return CheckResult(name="jensen", passed=False, residual=None,
                           details={"reason": "u is not positive on the sphere"})
    D = float(grid.params.D)
    omega = grid.omega
    lhs = rho ** (D - 1) * grid.integrate(values ** alpha)
    rhs = rho ** (D - 1) * omega ** (1 - alpha) * grid.integrate(values) ** alpha
    gap = lhs - rhs
    passed = gap >= -MOMENT_TOLERANCE * abs(lhs)
    return CheckResult(name="jensen", passed=passed, residual=gap,
                       details={"lhs": lhs, "rhs": rhs, "gap": gap, "omega": omega,
                                "alpha": alpha, "rho": rho})


def l1_singularity_check(e: Union[RadialPowerExpr, Poly], tau: Fraction, params: OperatorParams,
                         grid: WeightedQuadratureGrid, alpha: Fraction = Fraction(1),
                         levels: Optional[int] = None) -> IntegrabilityReport:
    """
    Is |x_{n+1}|^{2a-1} |x|^{-τ} e^α integrable on B_1?

    Shell integrals over [s_{k+1}, s_k] behave like s_k^γ near a power
    singularity; γ > 0 means integrable, γ = 0 a logarithmic and γ < 0 a
    power divergence with growth exponent -γ.
    """
    e = _as_expr(e)
    tau, alpha = float(tau), float(alpha)

    def integrand(points: np.ndarray) -> np.ndarray:
        values = np.asarray(e.evaluate(points), dtype=float)
        if np.any(values < 0):
            raise SingularEvaluation("l1 check needs a non-negative function")
        r = np.linalg.norm(points, axis=1)
        return r ** -tau * values ** alpha

    levels = Config.SHRINK_LEVELS if levels is None else levels
    shells = shell_integrals(integrand, grid, radii=shrink_radii(levels=levels))
    total = pairwise_sum(shells)
    noise = 64 * np.finfo(float).eps * max(1.0, abs(total))
    if abs(shells[-1]) <= noise:
        return IntegrabilityReport(integrable=True, value=total, growth_exponent=None)

    inner = shells[1:]
    ratios = (inner[1:] / inner[:-1]).tolist()
    if len(ratios) < 2 or min(ratios[-3:]) <= 0:
        raise Inconclusive(f"shell integrals change sign or vanish: {inner.tolist()}")
    q_last, q_prev = ratios[-1], ratios[-2]
    if abs(q_last - q_prev) > RATIO_SPREAD * max(1.0, q_last):
        raise Inconclusive(f"shell ratios {q_prev:.6g}, {q_last:.6g} show no power law")

    gamma = -math.log2(q_last)
    if gamma > 0.05:
        value = total + shells[-1] * q_last / (1 - q_last)
        return IntegrabilityReport(integrable=True, value=value, growth_exponent=None,
                                   shell_ratios=ratios)
    exponent = 0.0 if abs(gamma) <= 0.05 else -gamma
    logger.info(f"integrand diverges at the origin (growth exponent {exponent:.6g})")
    return IntegrabilityReport(integrable=False, value=None, growth_exponent=exponent,
                               shell_ratios=ratios)


def weighted_average_flux_check(u: Union[RadialPowerExpr, Poly], r: float, params: OperatorParams,
                                grid: WeightedQuadratureGrid, tolerance: Optional[float] = None
                                ) -> CheckResult:
    """r^{n+2a-1} z'(r) = ∫_{B_r} |x_{n+1}|^{2a-1} Ãu dx"""
    u = _as_expr(u)
    tolerance = Config.TOLERANCE if tolerance is None else tolerance
    D = float(params.D)
    # z'(r) = r^{-1} ∫ |θ_{n+1}|^{2a-1} (x.∇u)(rθ) dθ
    lhs = r ** (D - 2) * weighted_average_z(u.euler(), r, grid)
    laplacian = -apply_power(u, params, 1)
    rhs, order = richardson_limit(integrate_ball_shells(laplacian, params, grid, outer=r))
    residual = abs(lhs - rhs)
    passed = residual <= tolerance * (abs(lhs) + abs(rhs) + 1.0)
    return CheckResult(name="weighted_average_flux", passed=passed, residual=residual,
                       details={"r": r, "flux": lhs, "ball_integral": rhs, "order": order})
