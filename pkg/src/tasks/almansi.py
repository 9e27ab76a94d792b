"""
Almansi-type decomposition of even polynomials into weighted-harmonic parts

An even homogeneous polynomial of degree m splits uniquely as
p = p_m + |x|^2 p_{m-2} + |x|^4 p_{m-4} + ... with every p_{m-2i}
annihilated by the weighted operator. The split is found by exact linear
algebra over the rationals (sympy DomainMatrix over QQ in the graded-lex monomial
basis of even polynomials).
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from sympy import QQ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from src.exceptions import DimensionMismatch, NotHomogeneous, OddParity, SingularSystem
from src.models import OperatorParams
from src.polyring import Monomial, Poly, monomials_of_degree, monomials_up_to_degree
from src.utils import format_rational
from src.weighted_operator import laplacian_with_weight, weighted_laplacian_poly

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HarmonicBasis:
    """Basis of weighted-harmonic even homogeneous polynomials of one degree"""
    degree: int
    params: OperatorParams
    elements: Tuple[Poly, ...]

    @property
    def dimension(self) -> int:
        return len(self.elements)


@dataclass
class HomogeneousDecomposition:
    degree: int
    dim: int
    parts: List[Tuple[int, Poly]] = field(default_factory=list)

    def reconstruct(self) -> Poly:
        return reconstruct(self)

    def part(self, i: int) -> Poly:
        for index, poly in self.parts:
            if index == i:
                return poly
        return Poly.zero(self.dim)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "parts": [{"i": i, "degree": self.degree - 2 * i, "poly": poly.to_json()}
                      for i, poly in self.parts],
        }


def _coordinates(p: Poly, index: Dict[Monomial, int]) -> List[Fraction]:
    column = [Fraction(0)] * len(index)
    for m, c in p.items():
        column[index[m]] = c
    return column


def _matrix(columns: Sequence[Sequence[Fraction]], rows: int) -> DomainMatrix:
    entries = [[(columns[j][i].numerator, columns[j][i].denominator) for j in range(len(columns))]
               for i in range(rows)]
    return DomainMatrix.from_list(entries, QQ)


def _fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


@lru_cache(maxsize=None)
def _reduction_inverse(m: int, n: int, a: Fraction) -> Tuple[Tuple[Monomial, ...], DomainMatrix]:
    """Inverse of q -> Ã(|x|^2 q) on even homogeneous polynomials of degree m-2"""
    dim = n + 1
    basis = tuple(monomials_of_degree(dim, m - 2, even_last=True))
    index = {mono: i for i, mono in enumerate(basis)}
    r2 = Poly.norm_squared(dim)
    columns = [
        _coordinates(laplacian_with_weight(r2 * Poly.monomial(mono), a), index)
        for mono in basis
    ]
    matrix = _matrix(columns, len(basis))
    try:
        inverse = matrix.inv()
    except DMNonInvertibleMatrixError as e:
        logger.error(f"reduction operator singular at degree {m} (n={n}, a={a})")
        raise SingularSystem(f"q -> Ã(|x|^2 q) is singular at degree {m}: {e}")
    logger.debug(f"cached reduction inverse for m={m}, n={n}, a={format_rational(a)}")
    return basis, inverse


@lru_cache(maxsize=None)
def _T_inverse(m: int, n: int, a: Fraction) -> Tuple[Tuple[Monomial, ...], DomainMatrix]:
    """Inverse of T(q) = Ã((1-|x|^2) q) on even polynomials of degree <= m-2"""
    dim = n + 1
    basis = tuple(monomials_up_to_degree(dim, m - 2, even_last=True))
    index = {mono: i for i, mono in enumerate(basis)}
    one_minus_r2 = Poly.one(dim) - Poly.norm_squared(dim)
    columns = [
        _coordinates(laplacian_with_weight(one_minus_r2 * Poly.monomial(mono), a), index)
        for mono in basis
    ]
    matrix = _matrix(columns, len(basis))
    try:
        inverse = matrix.inv()
    except DMNonInvertibleMatrixError as e:
        logger.error(f"T singular on even polynomials of degree <= {m - 2} (n={n}, a={a})")
        raise SingularSystem(f"T is singular on degree <= {m - 2}: {e}")
    return basis, inverse


def _solve(basis: Sequence[Monomial], inverse: DomainMatrix, rhs: Poly) -> Poly:
    index = {mono: i for i, mono in enumerate(basis)}
    vector = _matrix([_coordinates(rhs, index)], len(basis))
    solution = (inverse * vector).to_list()
    return Poly(rhs.dim, {mono: _fraction(row[0]) for mono, row in zip(basis, solution)})


def _check_operand(p: Poly, params: OperatorParams) -> None:
    if p.dim != params.dim:
        raise DimensionMismatch(f"polynomial in dimension {p.dim}, operator in {params.dim}")
    if not p.is_even_in_last():
        raise OddParity(f"{p} is not even in x_{p.dim}")


def solve_T(p: Poly, params: OperatorParams) -> Poly:
    """
    q of degree <= deg p - 2, even in x_{n+1}, with Ã((1-|x|^2) q + p) = 0
    """
    _check_operand(p, params)
    m = p.degree
    if m < 2:
        return Poly.zero(p.dim)
    basis, inverse = _T_inverse(m, params.n, params.a)
    rhs = -weighted_laplacian_poly(p, params)
    return _solve(basis, inverse, rhs)


def is_weighted_harmonic(p: Poly, params: OperatorParams) -> bool:
    return weighted_laplacian_poly(p, params).is_zero


@lru_cache(maxsize=None)
def _kernel_basis(m: int, n: int, a: Fraction) -> Tuple[Poly, ...]:
    dim = n + 1
    source = monomials_of_degree(dim, m, even_last=True)
    if m < 2:
        return tuple(Poly.monomial(mono) for mono in source)

    target = monomials_of_degree(dim, m - 2, even_last=True)
    index = {mono: i for i, mono in enumerate(target)}
    columns = [_coordinates(laplacian_with_weight(Poly.monomial(mono), a), index)
               for mono in source]
    kernel = _matrix(columns, len(target)).nullspace().to_list()

    elements = []
    for row in kernel:
        poly = Poly(dim, {mono: _fraction(v) for mono, v in zip(source, row)})
        _, lead = poly.leading_term
        elements.append(poly / lead)
    expected = len(source) - len(target)
    if len(elements) != expected:
        raise SingularSystem(
            f"kernel at degree {m} has dimension {len(elements)}, expected {expected}")
    logger.debug(f"cached harmonic basis for m={m}, n={n}, a={format_rational(a)}")
    return tuple(elements)


def harmonic_basis(m: int, params: OperatorParams) -> HarmonicBasis:
    """Exact basis of the kernel of Ã on even homogeneous polynomials of degree m"""
    if m < 0:
        raise ValueError(f"degree must be non-negative (got {m})")
    return HarmonicBasis(degree=m, params=params, elements=_kernel_basis(m, params.n, params.a))


def almansi_decompose(p: Poly, params: OperatorParams) -> HomogeneousDecomposition:
    """p = Σ |x|^{2i} p_{m-2i} with weighted-harmonic parts; zero parts are dropped"""
    _check_operand(p, params)
    if p.is_zero:
        return HomogeneousDecomposition(degree=0, dim=p.dim)
    if not p.is_homogeneous:
        raise NotHomogeneous(f"{p} is not homogeneous; split it with homogeneous_components")

    m = p.degree
    decomposition = HomogeneousDecomposition(degree=m, dim=p.dim)
    r2 = Poly.norm_squared(p.dim)
    remainder, i = p, 0
    while not remainder.is_zero:
        degree = m - 2 * i
        if degree < 2:
            decomposition.parts.append((i, remainder))
            break
        basis, inverse = _reduction_inverse(degree, params.n, params.a)
        q = _solve(basis, inverse, weighted_laplacian_poly(remainder, params))
        harmonic = remainder - r2 * q
        if not harmonic.is_zero:
            decomposition.parts.append((i, harmonic))
        remainder, i = q, i + 1

    logger.debug(f"decomposed degree {m} into {len(decomposition.parts)} parts")
    return decomposition


def reconstruct(decomposition: HomogeneousDecomposition) -> Poly:
    r2 = Poly.norm_squared(decomposition.dim)
    total = Poly.zero(decomposition.dim)
    for i, part in decomposition.parts:
        total = total + r2 ** i * part
    return total


def decompose_any(p: Poly, params: OperatorParams) -> List[HomogeneousDecomposition]:
    """One decomposition per homogeneous component, highest degree first"""
    _check_operand(p, params)
    return [almansi_decompose(component, params)
            for component in p.homogeneous_components().values()]
