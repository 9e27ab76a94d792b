import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.exceptions import InvalidParams, NonConvergentLimit
from src.models import OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.tasks.liouville import bubble_profile
from src.tasks.quadrature import (_exact_moment_rule, _jacobi_rule, average_law_check, build_weighted_sphere_rule,
                                  closed_form_moment, divergence_identity_check, integrate_ball_shells,
                                  jensen_weighted_check, l1_singularity_check, omega_a, refinement_slope,
                                  richardson_limit, weighted_average_flux_check, weighted_average_z)


@pytest.fixture
def grid_111(params_111):
    return build_weighted_sphere_rule(params_111)


def test_omega_smallest_case(params_111, grid_111):
    # 2 sqrt(pi) Γ(1) / Γ(3/2)
    assert omega_a(params_111) == pytest.approx(4.0, rel=1e-14)
    assert grid_111.omega == pytest.approx(4.0, rel=1e-12)
    assert grid_111.method == "gauss-jacobi"


@pytest.mark.parametrize("n,a", [(1, 1), (2, Fraction(3, 2)), (3, 1), (2, Fraction(7, 3))])
def test_sphere_rule_reproduces_moments(n, a):
    params = OperatorParams(n=n, a=a, p=1)
    grid = build_weighted_sphere_rule(params, degree=12)
    assert grid.omega == pytest.approx(omega_a(params), rel=1e-12)
    for m in range(7):
        approx = grid.integrate(np.abs(grid.nodes[:, -1]) ** (2 * m))
        assert approx == pytest.approx(closed_form_moment(params, m), rel=1e-12)


def test_sphere_rule_tangential_moment(grid_111):
    # ∫_{S^1} |θ_2| θ_1^2 dθ = 4/3
    assert grid_111.integrate(grid_111.nodes[:, 0] ** 2) == pytest.approx(4 / 3, rel=1e-12)


def test_odd_integrands_vanish(params_half):
    grid = build_weighted_sphere_rule(params_half)
    nodes = grid.nodes
    assert grid.integrate(nodes[:, 0]) == pytest.approx(0.0, abs=1e-13)
    assert grid.integrate(nodes[:, -1] ** 3) == pytest.approx(0.0, abs=1e-13)
    assert grid.integrate(nodes[:, 0] * nodes[:, 1] ** 2) == pytest.approx(0.0, abs=1e-13)


def test_sphere_rule_nodes_lie_on_the_sphere(params_biharmonic):
    grid = build_weighted_sphere_rule(params_biharmonic)
    assert grid.nodes.shape[1] == params_biharmonic.dim
    assert np.allclose(np.linalg.norm(grid.nodes, axis=1), 1.0, rtol=1e-14)


def test_exact_moment_rule_matches_gauss_jacobi():
    a, beta = Fraction(3, 2), Fraction(1, 2)
    nodes, weights = _jacobi_rule(a, beta, 5)
    exact_nodes, exact_weights = _exact_moment_rule(a, beta, 5)
    assert np.allclose(np.sort(nodes), exact_nodes, atol=1e-10)
    assert np.allclose(weights[np.argsort(nodes)], exact_weights, rtol=1e-9)


def test_sphere_rule_needs_positive_degree(params_111):
    with pytest.raises(InvalidParams):
        build_weighted_sphere_rule(params_111, degree=0)


def test_richardson_geometric_tail():
    values = [1 - 2.0 ** (-2 * k) for k in range(8)]
    limit, order = richardson_limit(values)
    assert limit == pytest.approx(1.0, abs=1e-15)
    assert order == pytest.approx(2.0, rel=1e-9)


def test_richardson_settled_sequence():
    assert richardson_limit([0.5, 0.5, 0.5]) == (0.5, math.inf)


@pytest.mark.parametrize("values", [[0, 1, 3, 7, 15], [1.0], [0, 1, 1.5, 2.5, 2.0]])
def test_richardson_rejects_divergent_sequences(values):
    with pytest.raises(NonConvergentLimit):
        richardson_limit(values)


def test_ball_integral_of_constant(params_111, grid_111):
    # ∫_{B_1} |x_2| dx = ω_a / (n+2a)
    limit, _ = richardson_limit(integrate_ball_shells(Poly.one(2), params_111, grid_111))
    assert limit == pytest.approx(4 / 3, rel=1e-12)


def test_ball_integral_checks_dimensions(params_111, params_half, grid_111):
    with pytest.raises(InvalidParams):
        integrate_ball_shells(Poly.one(3), params_half, grid_111)


def test_divergence_identity_for_polynomial(params_111, grid_111):
    # boundary ∂_r|x|^2 = 2 gives 2ω, interior -Ã|x|^2 = -6 gives -6ω/3
    report = divergence_identity_check(Poly.norm_squared(2), params_111, grid_111)
    level = report.levels[0]
    assert level.boundary == pytest.approx(8.0, rel=1e-12)
    assert level.interior == pytest.approx(-8.0, rel=1e-12)
    assert report.passed
    assert report.precondition is None


def test_divergence_identity_biharmonic(params_biharmonic):
    grid = build_weighted_sphere_rule(params_biharmonic)
    u = Poly.norm_squared(4) ** 2
    report = divergence_identity_check(u, params_biharmonic, grid)
    assert [level.i for level in report.levels] == [0, 1]
    assert report.passed
    check = report.to_check()
    assert check.passed
    assert len(check.details["levels"]) == 2


def test_divergence_identity_for_bubble(params_111, grid_111):
    report = divergence_identity_check(bubble_profile(params_111, Fraction(1)), params_111, grid_111)
    level = report.levels[0]
    # ∂_r (1+r^2)^{-1/2} at r = 1 is -2^{-3/2}
    assert level.boundary == pytest.approx(-4 * 2 ** -1.5, rel=1e-10)
    assert report.passed


def test_divergence_identity_reports_singular_precondition(params_111, grid_111):
    report = divergence_identity_check(RadialPowerExpr.radial_power(2, -1), params_111, grid_111)
    # critical alpha = 5 makes the integrand |x|^{-5}
    assert not report.precondition.integrable
    assert report.precondition.growth_exponent == pytest.approx(2.0, rel=1e-6)
    assert report.to_check().details["precondition"]["integrable"] is False


def test_average_law_for_fundamental_solution(params_111, grid_111):
    u = RadialPowerExpr.radial_power(2, 2 * params_111.p - params_111.D)
    check = average_law_check(u, 0, params_111, grid_111)
    assert check.passed
    assert check.details["fitted"] == pytest.approx(4.0, rel=1e-12)
    assert check.details["beta"] == pytest.approx(-4.0, rel=1e-12)


def test_l1_integrable_singularity(params_111, grid_111):
    report = l1_singularity_check(RadialPowerExpr.radial_power(2, -1), Fraction(0), params_111, grid_111)
    assert report.integrable
    # ω_a / (D - 1)
    assert report.value == pytest.approx(2.0, rel=1e-8)
    assert report.to_check().passed


def test_l1_logarithmic_divergence(params_111, grid_111):
    report = l1_singularity_check(RadialPowerExpr.radial_power(2, -3), Fraction(0), params_111, grid_111)
    assert not report.integrable
    assert report.growth_exponent == 0.0


def test_l1_power_divergence(params_111, grid_111):
    report = l1_singularity_check(RadialPowerExpr.radial_power(2, -4), Fraction(0), params_111, grid_111)
    assert not report.integrable
    assert report.growth_exponent == pytest.approx(1.0, rel=1e-6)
    assert not report.to_check().passed


def test_l1_weight_from_tau(params_111, grid_111):
    # |x|^{-2} |x|^{-1}: same as the logarithmic case
    report = l1_singularity_check(RadialPowerExpr.radial_power(2, -1), Fraction(2), params_111, grid_111)
    assert report.growth_exponent == 0.0


def test_jensen_gap_is_positive(params_111, grid_111):
    u = Poly.one(2) + Poly.variable(2, 0) ** 2
    check = jensen_weighted_check(u, Fraction(3), 1.0, grid_111)
    assert check.passed
    assert check.residual > 0


def test_jensen_equality_for_constants(params_111, grid_111):
    check = jensen_weighted_check(Poly.constant(2, 2), Fraction(5, 2), 0.5, grid_111)
    assert check.passed
    assert check.residual == pytest.approx(0.0, abs=1e-12)


def test_jensen_needs_positive_function(params_111, grid_111):
    check = jensen_weighted_check(Poly.variable(2, 0), Fraction(2), 1.0, grid_111)
    assert not check.passed
    assert check.residual is None


def test_weighted_average_flux(params_111, grid_111):
    check = weighted_average_flux_check(Poly.norm_squared(2), 0.7, params_111, grid_111)
    # both sides equal 2 ω r^3
    assert check.details["flux"] == pytest.approx(8 * 0.7 ** 3, rel=1e-12)
    assert check.passed


def test_divergence_residual_shrinks_like_the_ball_volume(params_111, grid_111):
    # boundary + ∫_{B_1 \ B_s} (-6|x_2|) = 8 s^3
    report = divergence_identity_check(Poly.norm_squared(2), params_111, grid_111)
    assert report.levels[0].refinement_slope == pytest.approx(3.0, abs=1e-3)
    assert report.to_check().details["levels"][0]["refinement_slope"] == report.levels[0].refinement_slope


def test_divergence_residual_for_bubble_converges(params_111, grid_111):
    report = divergence_identity_check(bubble_profile(params_111, Fraction(1)), params_111, grid_111)
    slope = report.levels[0].refinement_slope
    assert slope >= 2.0
    assert slope == pytest.approx(3.0, abs=0.3)


def test_divergence_residual_slopes_biharmonic(params_biharmonic):
    # (-Ã)|x|^4 = -28|x|^2 and (-Ã)^2|x|^4 = 280 in D = 5
    grid = build_weighted_sphere_rule(params_biharmonic)
    report = divergence_identity_check(Poly.norm_squared(4) ** 2, params_biharmonic, grid)
    assert report.levels[0].refinement_slope == pytest.approx(7.0, abs=0.05)
    assert report.levels[1].refinement_slope == pytest.approx(5.0, abs=0.05)


def test_refinement_slope_ignores_rounding_noise():
    radii = 0.5 * 2.0 ** -np.arange(12)
    assert refinement_slope(radii ** 2, radii) == pytest.approx(2.0, rel=1e-12)
    assert refinement_slope(np.full(12, 1e-17), radii) is None
    assert refinement_slope([1.0, 0.5], radii[:2]) is None


def test_average_law_at_first_level(params_biharmonic):
    # (-Ã)|x|^{-1} = 2|x|^{-3}, which is weighted-harmonic in D = 5
    grid = build_weighted_sphere_rule(params_biharmonic)
    u = RadialPowerExpr.radial_power(4, 2 * params_biharmonic.p - params_biharmonic.D)
    check = average_law_check(u, 1, params_biharmonic, grid)
    assert check.name == "average_law_i1"
    assert check.passed
    assert check.details["fitted"] == pytest.approx(2 * grid.omega, rel=1e-10)
    assert check.details["beta"] == pytest.approx(-6 * grid.omega, rel=1e-10)


def test_weighted_average_z_of_polynomials(params_111, grid_111):
    assert weighted_average_z(Poly.norm_squared(2), 0.3, grid_111) == pytest.approx(4 * 0.09, rel=1e-12)
    # 2^2 ∫_{S^1} |θ_2| θ_1^2 dθ
    assert weighted_average_z(Poly.variable(2, 0) ** 2, 2.0, grid_111) == pytest.approx(16 / 3, rel=1e-12)
    assert weighted_average_z(Poly.variable(2, 1), 2.0, grid_111) == pytest.approx(0.0, abs=1e-13)


@given(t=st.fractions(min_value=-3, max_value=4, max_denominator=4),
       r=st.floats(min_value=0.05, max_value=5.0))
def test_weighted_average_z_of_radial_powers(t, r):
    grid = build_weighted_sphere_rule(OperatorParams(n=1, a=1, p=1))
    value = weighted_average_z(RadialPowerExpr.radial_power(2, t), r, grid)
    assert value == pytest.approx(4.0 * r ** float(t), rel=1e-11)
