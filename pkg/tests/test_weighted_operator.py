from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.exceptions import DimensionMismatch, OddParity
from src.models import OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.weighted_operator import (HalfSpacePoly, apply_A_halfspace, apply_power, apply_weighted_laplacian,
                                   check_vanishing_odd_derivatives, eigen_factor, lift_dimension,
                                   lifted_params, substitute_parabolic, weighted_laplacian_poly)
from tests.strategies import polys, weights

exponents = st.fractions(min_value=-6, max_value=6, max_denominator=4)


def x(dim, axis):
    return Poly.variable(dim, axis)


def test_polynomial_examples(params_111):
    # n=1, a=1: Δ + (1/x2) ∂_2
    assert weighted_laplacian_poly(x(2, 1) ** 2, params_111) == Poly.constant(2, 4)
    assert weighted_laplacian_poly(Poly.norm_squared(2), params_111) == Poly.constant(2, 6)
    assert weighted_laplacian_poly(2 * x(2, 0) ** 2 - x(2, 1) ** 2, params_111).is_zero


def test_odd_polynomial_rejected(params_111):
    with pytest.raises(OddParity):
        weighted_laplacian_poly(x(2, 1), params_111)


def test_dimension_checked(params_111):
    with pytest.raises(DimensionMismatch):
        apply_weighted_laplacian(Poly.norm_squared(3), params_111)


@given(polys(dim=3, even_last=True), exponents, weights)
def test_product_rule_with_radial_power(p, t, a):
    # Ã(p |x|^t) = |x|^t Ãp + 2t |x|^{t-2} x.∇p + p Ã|x|^t
    params = OperatorParams(n=2, a=a, p=1)
    radial = RadialPowerExpr.radial_power(3, t)
    lhs = apply_weighted_laplacian(radial * p, params)
    rhs = (radial * weighted_laplacian_poly(p, params)
           + RadialPowerExpr.radial_power(3, t - 2, coeff=p.euler() * (2 * t))
           + apply_weighted_laplacian(radial, params) * p)
    assert lhs == rhs


@given(exponents, weights)
def test_radial_eigenvalue(t, a):
    params = OperatorParams(n=2, a=a, p=1)
    image = apply_weighted_laplacian(RadialPowerExpr.radial_power(3, t), params)
    expected = RadialPowerExpr.radial_power(3, t - 2, coeff=eigen_factor(t, 0, params))
    assert image == expected


def test_fundamental_solution_is_annihilated(params_half):
    fundamental = RadialPowerExpr.radial_power(params_half.dim, 2 - params_half.D)
    assert apply_weighted_laplacian(fundamental, params_half).is_zero


def test_eigenvalue_with_harmonic_factor(params_111):
    # h = 2 x1^2 - x2^2 is weighted-harmonic of degree 2
    h = 2 * x(2, 0) ** 2 - x(2, 1) ** 2
    t = Fraction(1, 3)
    e = RadialPowerExpr.radial_power(2, t - 2, coeff=h)
    expected = RadialPowerExpr.radial_power(2, t - 4, coeff=h * eigen_factor(t, 2, params_111))
    assert apply_weighted_laplacian(e, params_111) == expected


def test_generic_path_matches_finite_differences(params_half):
    base = Poly.shifted_quadratic(1, [Fraction(1, 2), 0, 0])
    e = RadialPowerExpr.power(base, Fraction(-3, 4), coeff=x(3, 0) + x(3, 2) ** 2)
    image = apply_weighted_laplacian(e, params_half)
    point = np.array([0.3, -0.4, 0.8])
    h = 1e-4
    second = 0.0
    for axis in range(3):
        step = np.zeros(3)
        step[axis] = h
        second += (e.evaluate(point + step) - 2 * e.evaluate(point) + e.evaluate(point - step)) / h ** 2
    step = np.zeros(3)
    step[2] = h
    first = (e.evaluate(point + step) - e.evaluate(point - step)) / (2 * h)
    expected = second + (2 * float(params_half.a) - 1) * first / point[2]
    assert image.evaluate(point) == pytest.approx(expected, rel=1e-5)


def test_apply_power_composes(params_biharmonic):
    e = RadialPowerExpr.power(Poly.shifted_quadratic(1, [0] * 4), Fraction(-1, 2))
    once = apply_power(e, params_biharmonic, 1)
    assert apply_power(e, params_biharmonic, 2) == apply_power(once, params_biharmonic, 1)
    assert apply_power(e, params_biharmonic, 0) == e
    with pytest.raises(ValueError):
        apply_power(e, params_biharmonic, -1)


@given(polys(dim=3, max_degree=6), weights)
def test_parabolic_substitution_conjugates(u, a):
    params = OperatorParams(n=2, a=a, p=1)
    half = HalfSpacePoly(u)
    lhs = weighted_laplacian_poly(substitute_parabolic(half), params)
    rhs = substitute_parabolic(apply_A_halfspace(half, params))
    assert lhs == rhs


def test_square_of_operator_on_fourth_power(params_111):
    # D = 3: Ã|x|^4 = 20|x|^2 and Ã|x|^2 = 6
    image = apply_power(RadialPowerExpr.radial_power(2, 4), params_111, 2)
    assert image.as_poly() == Poly.constant(2, 120)
    assert apply_power(RadialPowerExpr.radial_power(2, 4), params_111, 1).as_poly() == -20 * Poly.norm_squared(2)


@given(polys(dim=2, max_degree=4))
def test_odd_derivatives_vanish(u):
    assert check_vanishing_odd_derivatives(HalfSpacePoly(u), 4)


def test_halfspace_operator_example():
    params = OperatorParams(n=1, a=Fraction(3, 2), p=1)
    y = x(2, 1)
    u = HalfSpacePoly(y ** 2 + x(2, 0) ** 2)
    # y*2 + (3/2)*2y + 2
    assert apply_A_halfspace(u, params).poly == 5 * y + 2
    assert str(u) == "x1^2 + y^2"


def test_halfspace_dimension_checked(params_111):
    with pytest.raises(DimensionMismatch):
        apply_A_halfspace(HalfSpacePoly(Poly.norm_squared(3)), params_111)


@given(polys(dim=2, even_last=True, max_degree=4), exponents)
def test_lift_intertwines_operators(q, g):
    params = OperatorParams(n=1, a=Fraction(3, 2), p=1)
    e = RadialPowerExpr.power(Poly.norm_squared(2) + 1, g, coeff=q)
    lifted = lifted_params(params)
    assert lifted.D == params.D
    lhs = apply_weighted_laplacian(lift_dimension(e), lifted)
    rhs = lift_dimension(apply_weighted_laplacian(e, params))
    assert lhs == rhs


def test_lift_allows_small_weight():
    lifted = lifted_params(OperatorParams(n=1, a=1, p=1))
    assert lifted.a == Fraction(1, 2)
    assert lifted.n == 2


def test_lift_rejects_odd_elements():
    with pytest.raises(OddParity):
        lift_dimension(x(2, 1))
