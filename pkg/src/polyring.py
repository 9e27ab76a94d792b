"""
Exact multivariate polynomials over the rationals

A Poly lives in a fixed ambient dimension d = n+1; axis d-1 is the
degenerate coordinate x_{n+1}. Terms are kept in graded-lex order,
leading term first, with no zero coefficients stored.
"""
import logging
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.exceptions import AxisOutOfRange, DimensionMismatch, MalformedInput, NotDivisible
from src.utils import format_rational, parse_rational

logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction]


def grlex_key(monomial: Monomial) -> Tuple[int, Monomial]:
    return (sum(monomial), monomial)


def monomials_of_degree(dim: int, degree: int, even_last: bool = False) -> List[Monomial]:
    """All exponent vectors of total degree `degree`, in descending graded-lex order"""
    if degree < 0:
        return []
    result = []
    for combo in combinations_with_replacement(range(dim), degree):
        exps = [0] * dim
        for axis in combo:
            exps[axis] += 1
        if even_last and exps[-1] % 2:
            continue
        result.append(tuple(exps))
    result.sort(key=grlex_key, reverse=True)
    return result


def monomials_up_to_degree(dim: int, degree: int, even_last: bool = False) -> List[Monomial]:
    result: List[Monomial] = []
    for m in range(degree, -1, -1):
        result.extend(monomials_of_degree(dim, m, even_last))
    return result


class Poly:
    """Immutable polynomial with exact rational coefficients"""

    __slots__ = ("dim", "_coeffs", "_order", "_hash")

    def __init__(self, dim: int, terms: Optional[Mapping[Monomial, Scalar]] = None):
        if dim < 1:
            raise DimensionMismatch(f"Ambient dimension must be >= 1 (got {dim})")
        coeffs: Dict[Monomial, Fraction] = {}
        for exps, coeff in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dim:
                raise DimensionMismatch(
                    f"Monomial {exps} has length {len(exps)}, expected {dim}")
            if any(e < 0 for e in exps):
                raise MalformedInput(f"Negative exponent in monomial {exps}")
            value = Fraction(coeff)
            if value:
                coeffs[exps] = coeffs.get(exps, Fraction(0)) + value
                if not coeffs[exps]:
                    del coeffs[exps]
        self.dim = dim
        self._coeffs = coeffs
        self._order = tuple(sorted(coeffs, key=grlex_key, reverse=True))
        self._hash = None

    # construction

    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: Scalar) -> "Poly":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def one(cls, dim: int) -> "Poly":
        return cls.constant(dim, 1)

    @classmethod
    def variable(cls, dim: int, axis: int) -> "Poly":
        _check_axis(dim, axis)
        exps = [0] * dim
        exps[axis] = 1
        return cls(dim, {tuple(exps): 1})

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: Scalar = 1) -> "Poly":
        return cls(len(exps), {tuple(exps): coeff})

    @classmethod
    def norm_squared(cls, dim: int) -> "Poly":
        """|x|^2"""
        terms = {}
        for axis in range(dim):
            exps = [0] * dim
            exps[axis] = 2
            terms[tuple(exps)] = 1
        return cls(dim, terms)

    @classmethod
    def shifted_quadratic(cls, c: Scalar, center: Sequence[Scalar]) -> "Poly":
        """c + |x - center|^2"""
        dim = len(center)
        result = cls.constant(dim, c)
        for axis, b in enumerate(center):
            shifted = cls.variable(dim, axis) - Fraction(b)
            result = result + shifted * shifted
        return result

    # inspection

    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return {m: self._coeffs[m] for m in self._order}

    def items(self) -> Iterator[Tuple[Monomial, Fraction]]:
        for m in self._order:
            yield m, self._coeffs[m]

    def coefficient(self, exps: Monomial) -> Fraction:
        return self._coeffs.get(tuple(exps), Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    def __bool__(self) -> bool:
        return bool(self._coeffs)

    def __len__(self) -> int:
        return len(self._coeffs)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial"""
        if not self._order:
            return -1
        return sum(self._order[0])

    @property
    def is_constant(self) -> bool:
        return self.degree <= 0

    @property
    def constant_term(self) -> Fraction:
        return self._coeffs.get((0,) * self.dim, Fraction(0))

    @property
    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self._order}) <= 1

    @property
    def leading_term(self) -> Tuple[Monomial, Fraction]:
        if not self._order:
            raise ZeroDivisionError("zero polynomial has no leading term")
        m = self._order[0]
        return m, self._coeffs[m]

    @property
    def sort_key(self) -> Tuple:
        return tuple((m, (c.numerator, c.denominator)) for m, c in self.items())

    def is_even_in_last(self) -> bool:
        return all(m[-1] % 2 == 0 for m in self._order)

    def is_odd_in_last(self) -> bool:
        return all(m[-1] % 2 == 1 for m in self._order)

    # ring operations

    def _coerce(self, other: Union["Poly", Scalar]) -> "Poly":
        if isinstance(other, Poly):
            if other.dim != self.dim:
                raise DimensionMismatch(
                    f"Polynomials live in dimensions {self.dim} and {other.dim}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(self.dim, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._coeffs)
        for m, c in other._coeffs.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Poly(self.dim, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.dim, {m: -c for m, c in self._coeffs.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            value = Fraction(other)
            return Poly(self.dim, {m: c * value for m, c in self._coeffs.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise ZeroDivisionError("division of a polynomial by zero")
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int) -> "Poly":
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"Polynomial powers need a non-negative integer (got {k})")
        result = Poly.one(self.dim)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self == Poly.constant(self.dim, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.dim == other.dim and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dim, self.sort_key))
        return self._hash

    # calculus and structure

    def partial_derivative(self, axis: int) -> "Poly":
        return partial_derivative(self, axis)

    def euler(self) -> "Poly":
        """x . grad p: each monomial scaled by its degree"""
        return Poly(self.dim, {m: c * sum(m) for m, c in self._coeffs.items()})

    def homogeneous_components(self) -> Dict[int, "Poly"]:
        return homogeneous_components(self)

    def homogeneous_part(self, degree: int) -> "Poly":
        return Poly(self.dim, {m: c for m, c in self._coeffs.items() if sum(m) == degree})

    def divide_by_last(self) -> "Poly":
        """Exact division by x_{n+1}"""
        terms = {}
        for m, c in self._coeffs.items():
            if m[-1] == 0:
                raise NotDivisible(f"monomial {m} is not divisible by x_{self.dim}")
            terms[m[:-1] + (m[-1] - 1,)] = c
        return Poly(self.dim, terms)

    def restrict_last_zero(self) -> "Poly":
        """p(x', 0) as a polynomial in the same ambient dimension"""
        return Poly(self.dim, {m: c for m, c in self._coeffs.items() if m[-1] == 0})

    def exact_divide(self, divisor: "Poly") -> "Poly":
        """
        Quotient of an exact division

        Raises NotDivisible when the division leaves a remainder.
        """
        divisor = self._coerce(divisor)
        if divisor.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        lead_m, lead_c = divisor.leading_term
        remainder = dict(self._coeffs)
        quotient: Dict[Monomial, Fraction] = {}
        while remainder:
            m = max(remainder, key=grlex_key)
            if any(e < l for e, l in zip(m, lead_m)):
                raise NotDivisible(f"leading monomial {m} not divisible by {lead_m}")
            qm = tuple(e - l for e, l in zip(m, lead_m))
            qc = remainder[m] / lead_c
            quotient[qm] = qc
            for dm, dc in divisor._coeffs.items():
                tm = tuple(e + f for e, f in zip(qm, dm))
                value = remainder.get(tm, Fraction(0)) - qc * dc
                if value:
                    remainder[tm] = value
                else:
                    remainder.pop(tm, None)
        return Poly(self.dim, quotient)

    def try_exact_divide(self, divisor: "Poly") -> Optional["Poly"]:
        try:
            return self.exact_divide(divisor)
        except NotDivisible:
            return None

    def proportionality(self, other: "Poly") -> Optional[Fraction]:
        """c with self == c * other, or None"""
        other = self._coerce(other)
        if self.is_zero or other.is_zero or self._order != other._order:
            return None
        m0 = self._order[0]
        ratio = self._coeffs[m0] / other._coeffs[m0]
        if all(self._coeffs[m] == ratio * other._coeffs[m] for m in self._order):
            return ratio
        return None

    def extend_dimension(self, extra: int = 1) -> "Poly":
        """Same polynomial read in dimension dim+extra (new axes appended)"""
        return Poly(self.dim + extra, {m + (0,) * extra: c for m, c in self._coeffs.items()})

    # evaluation

    def evaluate(self, points) -> Union[float, np.ndarray]:
        """Floating evaluation at one point (shape (d,)) or many (shape (N, d))"""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DimensionMismatch(
                f"Points have dimension {pts.shape[1]}, polynomial has {self.dim}")
        total = np.zeros(pts.shape[0])
        for m, c in self.items():
            total += float(c) * np.prod(pts ** np.asarray(m, dtype=float), axis=1)
        return float(total[0]) if single else total

    def evaluate_exact(self, point: Sequence[Scalar]) -> Fraction:
        if len(point) != self.dim:
            raise DimensionMismatch(
                f"Point has dimension {len(point)}, polynomial has {self.dim}")
        values = [Fraction(v) for v in point]
        total = Fraction(0)
        for m, c in self._coeffs.items():
            term = c
            for v, e in zip(values, m):
                if e:
                    term *= v ** e
            total += term
        return total

    # serialization

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [{"coeff": format_rational(c), "exps": list(m)} for m, c in self.items()],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "Poly":
        try:
            dim = payload["dim"]
            raw_terms = payload["terms"]
        except (KeyError, TypeError) as e:
            raise MalformedInput(f"Polynomial JSON needs 'dim' and 'terms': {e}")
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise MalformedInput(f"'dim' must be a positive integer (got {dim!r})")
        if not isinstance(raw_terms, list):
            raise MalformedInput("'terms' must be a list")
        terms: Dict[Monomial, Fraction] = {}
        for entry in raw_terms:
            try:
                exps = entry["exps"]
                coeff = parse_rational(entry["coeff"])
            except (KeyError, TypeError) as e:
                raise MalformedInput(f"Malformed term {entry!r}: {e}")
            if not isinstance(exps, list) or not all(
                    isinstance(e, int) and not isinstance(e, bool) for e in exps):
                raise MalformedInput(f"Exponents must be a list of integers: {exps!r}")
            if len(exps) != dim:
                raise MalformedInput(f"Exponent list {exps} does not match dim {dim}")
            key = tuple(exps)
            terms[key] = terms.get(key, Fraction(0)) + coeff
        return cls(dim, terms)

    def __repr__(self) -> str:
        return f"Poly(dim={self.dim}, {self})"

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        pieces = []
        for m, c in self.items():
            factors = [f"x{axis + 1}" + (f"^{e}" if e > 1 else "")
                       for axis, e in enumerate(m) if e]
            monomial = "*".join(factors)
            if not monomial:
                pieces.append(format_rational(c))
            elif c == 1:
                pieces.append(monomial)
            elif c == -1:
                pieces.append(f"-{monomial}")
            else:
                pieces.append(f"{format_rational(c)}*{monomial}")
        return " + ".join(pieces).replace("+ -", "- ")


def _check_axis(dim: int, axis: int) -> None:
    if not isinstance(axis, int) or not 0 <= axis < dim:
        raise AxisOutOfRange(f"axis {axis} outside 0..{dim - 1}")


def multiply(p: Poly, q: Poly) -> Poly:
    """Exact product of two polynomials in the same dimension"""
    if p.dim != q.dim:
        raise DimensionMismatch(f"Polynomials live in dimensions {p.dim} and {q.dim}")
    terms: Dict[Monomial, Fraction] = {}
    for m1, c1 in p._coeffs.items():
        for m2, c2 in q._coeffs.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            terms[m] = terms.get(m, Fraction(0)) + c1 * c2
    return Poly(p.dim, terms)


def partial_derivative(p: Poly, axis: int) -> Poly:
    _check_axis(p.dim, axis)
    terms = {}
    for m, c in p._coeffs.items():
        e = m[axis]
        if e:
            terms[m[:axis] + (e - 1,) + m[axis + 1:]] = c * e
    return Poly(p.dim, terms)


def homogeneous_components(p: Poly) -> Dict[int, Poly]:
    """Degree -> homogeneous component; empty for the zero polynomial"""
    buckets: Dict[int, Dict[Monomial, Fraction]] = {}
    for m, c in p._coeffs.items():
        buckets.setdefault(sum(m), {})[m] = c
    return {d: Poly(p.dim, buckets[d]) for d in sorted(buckets, reverse=True)}


def is_even_in_last(p: Poly) -> bool:
    return p.is_even_in_last()
