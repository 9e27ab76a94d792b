from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.exceptions import DimensionMismatch, NotHomogeneous, OddParity
from src.models import OperatorParams
from src.polyring import Poly, monomials_of_degree
from src.tasks.almansi import (almansi_decompose, decompose_any, harmonic_basis, is_weighted_harmonic,
                               reconstruct, solve_T)
from tests.strategies import coefficients, homogeneous_even_polys, polys, weights


def x(dim, axis):
    return Poly.variable(dim, axis)


def test_decompose_last_coordinate_squared(params_111):
    r2 = Poly.norm_squared(2)
    decomposition = almansi_decompose(x(2, 1) ** 2, params_111)
    assert decomposition.part(0) == x(2, 1) ** 2 - Fraction(2, 3) * r2
    assert decomposition.part(1) == Poly.constant(2, Fraction(2, 3))
    assert decomposition.reconstruct() == x(2, 1) ** 2


def test_harmonic_input_is_its_own_decomposition(params_111):
    h = 2 * x(2, 0) ** 2 - x(2, 1) ** 2
    decomposition = almansi_decompose(h, params_111)
    assert decomposition.parts == [(0, h)]


def test_json_lists_part_degrees(params_111):
    payload = almansi_decompose(x(2, 1) ** 2, params_111).to_json()
    assert [part["degree"] for part in payload["parts"]] == [2, 0]


@given(st.integers(min_value=2, max_value=3), st.integers(min_value=0, max_value=6), weights, st.data())
def test_round_trip_and_harmonicity(dim, degree, a, data):
    params = OperatorParams(n=dim - 1, a=a, p=1)
    p = data.draw(homogeneous_even_polys(dim=dim, degree=degree))
    decomposition = almansi_decompose(p, params)
    assert reconstruct(decomposition) == p
    for i, part in decomposition.parts:
        assert part.is_homogeneous
        assert part.degree == degree - 2 * i
        assert is_weighted_harmonic(part, params)


@given(homogeneous_even_polys(dim=3, degree=4), weights)
def test_solve_T_top_part_matches_reduction(p, a):
    params = OperatorParams(n=2, a=a, p=1)
    q = solve_T(p, params)
    assert is_weighted_harmonic(p + (1 - Poly.norm_squared(3)) * q, params)

    decomposition = almansi_decompose(p, params)
    q_top = (p - decomposition.part(0)).exact_divide(Poly.norm_squared(3))
    assert q.homogeneous_part(2) == q_top


def test_solve_T_low_degree_is_zero(params_111):
    assert solve_T(Poly.constant(2, 5), params_111).is_zero
    assert solve_T(x(2, 0), params_111).is_zero


@pytest.mark.parametrize("dim,degree", [(2, 2), (2, 4), (3, 4), (4, 6)])
def test_harmonic_basis_dimension(dim, degree):
    params = OperatorParams(n=dim - 1, a=Fraction(3, 2), p=1)
    basis = harmonic_basis(degree, params)
    expected = (len(monomials_of_degree(dim, degree, even_last=True))
                - len(monomials_of_degree(dim, degree - 2, even_last=True)))
    assert basis.dimension == expected
    for element in basis.elements:
        assert is_weighted_harmonic(element, params)
        assert element.leading_term[1] == 1


def test_harmonic_basis_low_degree(params_111):
    assert harmonic_basis(0, params_111).elements == (Poly.one(2),)
    assert harmonic_basis(1, params_111).dimension == 1
    with pytest.raises(ValueError):
        harmonic_basis(-1, params_111)


@given(polys(dim=2, even_last=True, max_degree=5))
def test_decompose_any_covers_every_component(p):
    params = OperatorParams(n=1, a=2, p=1)
    decompositions = decompose_any(p, params)
    total = Poly.zero(2)
    for decomposition in decompositions:
        total = total + decomposition.reconstruct()
    assert total == p


def test_decompose_errors(params_111):
    with pytest.raises(NotHomogeneous):
        almansi_decompose(x(2, 0) ** 2 + 1, params_111)
    with pytest.raises(OddParity):
        almansi_decompose(x(2, 0) * x(2, 1), params_111)
    with pytest.raises(DimensionMismatch):
        almansi_decompose(Poly.norm_squared(3), params_111)


def test_zero_decomposes_to_nothing(params_111):
    assert almansi_decompose(Poly.zero(2), params_111).parts == []


@given(weights, st.data())
def test_decomposition_recovers_the_parts_it_was_built_from(a, data):
    params = OperatorParams(n=2, a=a, p=1)
    r2 = Poly.norm_squared(3)
    parts = []
    for i, degree in enumerate([4, 2, 0]):
        elements = harmonic_basis(degree, params).elements
        coeffs = data.draw(st.lists(coefficients, min_size=len(elements), max_size=len(elements)))
        parts.append((i, sum((c * e for c, e in zip(coeffs, elements)), Poly.zero(3))))
    p = sum((r2 ** i * h for i, h in parts), Poly.zero(3))

    decomposition = almansi_decompose(p, params)
    for i, h in parts:
        assert decomposition.part(i) == h


def test_four_dimensional_degree_eight():
    params = OperatorParams(n=3, a=2, p=1)
    x1, x2, x3, x4 = (x(4, axis) for axis in range(4))
    p = (x1 ** 2 * x2 ** 2 * x3 ** 2 * x4 ** 2 + x4 ** 8 - 3 * x1 ** 8
         + Fraction(1, 2) * x1 * x2 * x3 ** 4 * x4 ** 2)
    decomposition = almansi_decompose(p, params)
    assert reconstruct(decomposition) == p
    assert not decomposition.part(0).is_zero
    # nonzero weighted sphere average
    assert decomposition.part(4).is_constant and not decomposition.part(4).is_zero
    for i, part in decomposition.parts:
        assert part.degree == 8 - 2 * i
        assert is_weighted_harmonic(part, params)
