from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.exceptions import DegenerateLevel, InvalidParams, PoorFit
from src.models import OperatorParams
from src.polyring import Poly
from src.radial_algebra import RadialPowerExpr
from src.tasks.almansi import harmonic_basis
from src.tasks.kelvin import (asymptotic_fit, chain_level_expression, inversion_chain, kelvin_pde_check,
                              kelvin_transform, product_A, product_B, verify_chain)
from src.tasks.liouville import bubble_profile, verify_bubble_constant
from src.utils import make_rng, sample_ball
from src.weighted_operator import apply_power
from tests.strategies import polys

rationals = st.fractions(min_value=-7, max_value=7, max_denominator=5)


def x(dim, axis):
    return Poly.variable(dim, axis)


@given(polys(dim=3, even_last=True, max_degree=4), st.fractions(min_value=-3, max_value=3, max_denominator=3))
def test_kelvin_is_an_involution(q, g):
    params = OperatorParams(n=2, a=Fraction(3, 2), p=1)
    e = RadialPowerExpr.power(Poly.shifted_quadratic(1, [1, 0, 0]), g, coeff=q)
    assert kelvin_transform(kelvin_transform(e, params), params) == e


@pytest.mark.parametrize("n,a,p", [(1, 1, 1), (2, 2, 2), (3, Fraction(3, 2), 2)])
def test_bubble_is_a_fixed_point(n, a, p):
    params = OperatorParams(n=n, a=a, p=p)
    profile = bubble_profile(params, Fraction(1))
    assert kelvin_transform(profile, params) == profile


def test_kelvin_matches_definition(params_half):
    u = Poly.norm_squared(3) + x(3, 0)
    star = kelvin_transform(u, params_half)
    point = np.array([0.5, -1.5, 2.0])
    r2 = float(point @ point)
    expected = r2 ** (float(params_half.kelvin_exponent) / 2) * u.evaluate(point / r2)
    assert star.evaluate(point) == pytest.approx(expected, rel=1e-13)


@given(st.integers(min_value=1, max_value=4), rationals, st.integers(min_value=0, max_value=4),
       st.integers(min_value=1, max_value=4), st.sampled_from([1, 2, 3]))
def test_products_agree(m, t, k, n, a):
    params = OperatorParams(n=n, a=a, p=1)
    assert product_A(m, t, k, params) == product_B(m, t, k, params)


def test_products_need_positive_m(params_111):
    with pytest.raises(InvalidParams):
        product_A(0, Fraction(1), 0, params_111)
    with pytest.raises(InvalidParams):
        product_B(0, Fraction(1), 0, params_111)


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("k", [0, 2, 3])
def test_iterated_eigen_identity(m, k):
    params = OperatorParams(n=2, a=1, p=1)
    D = params.D
    t = Fraction(1, 3)
    for h in harmonic_basis(k, params).elements:
        e = RadialPowerExpr.radial_power(3, 2 * m - D - t - k, coeff=h)
        image = apply_power(e, params, m) * (-1) ** m
        expected = RadialPowerExpr.radial_power(3, -D - t - k, coeff=h * product_B(m, t, k, params))
        assert image == expected


def test_inversion_chain_levels(params_biharmonic):
    u = Poly.one(4) + x(4, 0)
    chain = inversion_chain(u, params_biharmonic)
    assert [level.i for level in chain.levels] == [0, 1]
    # κ_0 = (2p-2)(D-2p) = 2 for D=5, p=2
    assert chain.level(1).c == 2
    assert verify_chain(u, chain, params_biharmonic)


def test_inversion_chain_rejects_deep_levels(params_biharmonic):
    with pytest.raises(DegenerateLevel):
        inversion_chain(Poly.one(4), params_biharmonic, levels=3)


def test_inversion_chain_needs_even_input(params_biharmonic):
    with pytest.raises(InvalidParams):
        inversion_chain(x(4, 3), params_biharmonic)


def test_far_field_coefficient_matches_chain_constant(params_biharmonic):
    u = Poly.one(4) + x(4, 0)
    chain = inversion_chain(u, params_biharmonic)
    for level in chain.levels:
        order = params_biharmonic.D - 2 * params_biharmonic.p + 2 * level.i
        fit = asymptotic_fit(chain_level_expression(chain, level.i, params_biharmonic), order,
                             [250.0, 500.0, 1000.0], params_biharmonic)
        assert fit.a0 == pytest.approx(float(level.c), rel=1e-2)
        assert fit.certifies_positivity


def test_asymptotic_fit_of_known_expansion(params_half):
    # |x|^{-3} (2 + x1/|x|^2) exactly
    e = (RadialPowerExpr.radial_power(3, -3, coeff=2)
         + RadialPowerExpr.radial_power(3, -5, coeff=x(3, 0)))
    fit = asymptotic_fit(e, 3, [20.0, 40.0, 80.0], params_half)
    assert fit.a0 == pytest.approx(2.0, rel=1e-10)
    assert fit.a == pytest.approx([1.0, 0.0, 0.0], abs=1e-8)


def test_asymptotic_fit_rejects_wrong_order(params_half):
    # angular dependence at leading order: |x|^{-3}(1 + x1^2/|x|^2)
    e = RadialPowerExpr.radial_power(3, -3) + RadialPowerExpr.radial_power(3, -5, coeff=x(3, 0) ** 2)
    with pytest.raises(PoorFit):
        asymptotic_fit(e, 3, [20.0, 40.0, 80.0], params_half)


def test_asymptotic_fit_needs_large_radii(params_half):
    with pytest.raises(InvalidParams):
        asymptotic_fit(RadialPowerExpr.radial_power(3, -3), 3, [1.0, 20.0], params_half)


def test_kelvin_pde_for_bubble(params_111):
    constant = verify_bubble_constant(params_111)
    points = sample_ball(make_rng(7), 200, params_111.dim, 10.0, min_radius=0.1, min_last=1e-3)
    check = kelvin_pde_check(bubble_profile(params_111, Fraction(1)), params_111.alpha_crit, params_111,
                             points, amplitude=constant.c0)
    assert check.passed
    assert check.residual <= 1e-9


def test_kelvin_pde_fails_off_critical(params_111):
    constant = verify_bubble_constant(params_111)
    points = sample_ball(make_rng(7), 50, params_111.dim, 10.0, min_radius=0.1, min_last=1e-3)
    check = kelvin_pde_check(bubble_profile(params_111, Fraction(1)), Fraction(3), params_111,
                             points, amplitude=constant.c0)
    assert not check.passed


@pytest.mark.parametrize("params", [OperatorParams(n=1, a=1, p=1), OperatorParams(n=3, a=1, p=2)])
def test_kelvin_pde_of_zero_is_exact(params):
    points = sample_ball(make_rng(8), 40, params.dim, 5.0, min_radius=0.1, min_last=1e-3)
    check = kelvin_pde_check(Poly.zero(params.dim), params.alpha_crit, params, points)
    assert check.passed
    assert check.residual == 0.0
