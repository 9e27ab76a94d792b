"""
Algebra of finite sums  Q(x) * prod_j B_j(x)^{gamma_j}

Q and the bases B_j are exact polynomials, the bases even in x_{n+1} and
of degree at most 4, the exponents rational. The algebra is closed under
differentiation, products, division by x_{n+1} of odd elements and the
inversion x -> x/|x|^2, which is all the weighted operator and the Kelvin
transform need.

Canonical form: terms are grouped by the set of (base, fractional part of
exponent) pairs; inside a group the polynomial parts are brought to the
lowest common exponents, summed, and then every base is divided out of the
sum for as long as the division is exact (integer exponents stop at 0 and
are absorbed into the polynomial). Zero is the empty sum.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.exceptions import DimensionMismatch, MalformedInput, NotDivisible, OddParity, SingularEvaluation
from src.polyring import Poly, homogeneous_components
from src.utils import exact_rational_power, format_rational, parse_rational

logger = logging.getLogger(__name__)

MAX_BASE_DEGREE = 4

Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class PowerFactor:
    """B(x)^gamma with B even in x_{n+1}"""
    base: Poly
    exponent: Fraction

    def __post_init__(self):
        if self.base.is_zero:
            raise MalformedInput("power factor base must not be the zero polynomial")
        if not self.base.is_even_in_last():
            raise OddParity(f"power factor base {self.base} is not even in the last variable")
        if self.base.degree > MAX_BASE_DEGREE:
            raise MalformedInput(
                f"power factor base has degree {self.base.degree} > {MAX_BASE_DEGREE}")
        object.__setattr__(self, "exponent", Fraction(self.exponent))

    @property
    def sort_key(self) -> Tuple:
        return (self.base.sort_key, (self.exponent.numerator, self.exponent.denominator))


@dataclass(frozen=True)
class RadialTerm:
    coeff_poly: Poly
    factors: Tuple[PowerFactor, ...] = ()

    @property
    def sort_key(self) -> Tuple:
        return (tuple(f.sort_key for f in self.factors), self.coeff_poly.sort_key)


def _frac(value: Fraction) -> Fraction:
    return value - math.floor(value)


class RadialPowerExpr:
    """Immutable element of the algebra; operations return canonical forms"""

    __slots__ = ("dim", "terms", "_canonical")

    def __init__(self, dim: int, terms: Sequence[RadialTerm] = (), _canonical: bool = False):
        for term in terms:
            if term.coeff_poly.dim != dim or any(f.base.dim != dim for f in term.factors):
                raise DimensionMismatch(f"term does not live in dimension {dim}")
        self.dim = dim
        self.terms: Tuple[RadialTerm, ...] = tuple(terms)
        self._canonical = _canonical

    # construction

    @classmethod
    def zero(cls, dim: int) -> "RadialPowerExpr":
        return cls(dim, (), _canonical=True)

    @classmethod
    def from_poly(cls, poly: Poly) -> "RadialPowerExpr":
        return cls(poly.dim, (RadialTerm(poly),)).normalize()

    @classmethod
    def constant(cls, dim: int, value: Scalar) -> "RadialPowerExpr":
        return cls.from_poly(Poly.constant(dim, value))

    @classmethod
    def power(cls, base: Poly, exponent: Scalar,
              coeff: Optional[Union[Poly, Scalar]] = None) -> "RadialPowerExpr":
        """coeff * base^exponent"""
        if coeff is None:
            coeff = Poly.one(base.dim)
        elif not isinstance(coeff, Poly):
            coeff = Poly.constant(base.dim, coeff)
        return cls(base.dim, (RadialTerm(coeff, (PowerFactor(base, Fraction(exponent)),)),)).normalize()

    @classmethod
    def radial_power(cls, dim: int, t: Scalar,
                     coeff: Optional[Union[Poly, Scalar]] = None) -> "RadialPowerExpr":
        """coeff * |x|^t"""
        return cls.power(Poly.norm_squared(dim), Fraction(t) / 2, coeff)

    # inspection

    @property
    def is_zero(self) -> bool:
        return not self.normalize().terms

    def as_poly(self) -> Optional[Poly]:
        """The element as a polynomial, or None when a power factor remains"""
        canonical = self.normalize()
        total = Poly.zero(self.dim)
        for term in canonical.terms:
            if term.factors:
                return None
            total = total + term.coeff_poly
        return total

    def is_even_in_last(self) -> bool:
        return all(t.coeff_poly.is_even_in_last() for t in self.normalize().terms)

    def is_odd_in_last(self) -> bool:
        return all(t.coeff_poly.is_odd_in_last() for t in self.normalize().terms)

    def bases(self) -> List[Poly]:
        seen: Dict[Poly, None] = {}
        for term in self.normalize().terms:
            for f in term.factors:
                seen.setdefault(f.base, None)
        return list(seen)

    # canonical form

    def normalize(self) -> "RadialPowerExpr":
        if self._canonical:
            return self
        return normalize(self)

    def __eq__(self, other) -> bool:
        if isinstance(other, (Poly, int, Fraction)) and not isinstance(other, bool):
            other = self._coerce(other)
        if not isinstance(other, RadialPowerExpr):
            return NotImplemented
        return self.dim == other.dim and self.normalize().terms == other.normalize().terms

    def __hash__(self) -> int:
        return hash((self.dim, self.normalize().terms))

    # arithmetic

    def _coerce(self, other) -> "RadialPowerExpr":
        if isinstance(other, RadialPowerExpr):
            if other.dim != self.dim:
                raise DimensionMismatch(
                    f"Expressions live in dimensions {self.dim} and {other.dim}")
            return other
        if isinstance(other, Poly):
            if other.dim != self.dim:
                raise DimensionMismatch(
                    f"Expression in dimension {self.dim}, polynomial in {other.dim}")
            return RadialPowerExpr(self.dim, (RadialTerm(other),))
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return RadialPowerExpr(self.dim, (RadialTerm(Poly.constant(self.dim, other)),))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RadialPowerExpr(self.dim, self.terms + other.terms).normalize()

    __radd__ = __add__

    def __neg__(self) -> "RadialPowerExpr":
        return self.scale(-1)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, value: Scalar) -> "RadialPowerExpr":
        value = Fraction(value)
        if value == 0:
            return RadialPowerExpr.zero(self.dim)
        return RadialPowerExpr(
            self.dim, tuple(RadialTerm(t.coeff_poly * value, t.factors) for t in self.terms),
            _canonical=self._canonical)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = []
        for t1 in self.terms:
            for t2 in other.terms:
                terms.append(RadialTerm(t1.coeff_poly * t2.coeff_poly, t1.factors + t2.factors))
        return RadialPowerExpr(self.dim, terms).normalize()

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise ZeroDivisionError("division of an expression by zero")
            return self.scale(1 / Fraction(other))
        return NotImplemented

    # calculus

    def differentiate(self, axis: int) -> "RadialPowerExpr":
        return differentiate(self, axis)

    def euler(self) -> "RadialPowerExpr":
        """x . grad e"""
        terms = []
        for term in self.normalize().terms:
            q = term.coeff_poly
            eq = q.euler()
            if eq:
                terms.append(RadialTerm(eq, term.factors))
            for j, f in enumerate(term.factors):
                eb = f.base.euler()
                if eb.is_zero:
                    continue
                lowered = PowerFactor(f.base, f.exponent - 1)
                factors = term.factors[:j] + (lowered,) + term.factors[j + 1:]
                terms.append(RadialTerm(q * eb * f.exponent, factors))
        return RadialPowerExpr(self.dim, terms).normalize()

    def divide_by_last_coordinate(self) -> "RadialPowerExpr":
        return divide_by_last_coordinate(self)

    def invert(self) -> "RadialPowerExpr":
        """e(x/|x|^2)"""
        r2 = Poly.norm_squared(self.dim)
        terms = []
        for term in self.normalize().terms:
            q_tilde, q_shift = invert_poly(term.coeff_poly)
            factors: List[PowerFactor] = []
            r2_exponent = Fraction(-q_shift)
            for f in term.factors:
                b_tilde, b_shift = invert_poly(f.base)
                factors.append(PowerFactor(b_tilde, f.exponent))
                r2_exponent -= b_shift * f.exponent
            if r2_exponent:
                factors.append(PowerFactor(r2, r2_exponent))
            terms.append(RadialTerm(q_tilde, tuple(factors)))
        return RadialPowerExpr(self.dim, terms).normalize()

    def map_polynomials(self, fn: Callable[[Poly], Poly], dim: int) -> "RadialPowerExpr":
        """Apply a ring homomorphism to every polynomial and base"""
        terms = []
        for term in self.normalize().terms:
            factors = tuple(PowerFactor(fn(f.base), f.exponent) for f in term.factors)
            terms.append(RadialTerm(fn(term.coeff_poly), factors))
        return RadialPowerExpr(dim, terms).normalize()

    # evaluation

    def evaluate(self, points) -> Union[float, np.ndarray]:
        return evaluate(self, points)

    # serialization

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {
                    "coeff_poly": term.coeff_poly.to_json(),
                    "factors": [{"base": f.base.to_json(), "exponent": format_rational(f.exponent)}
                                for f in term.factors],
                }
                for term in self.normalize().terms
            ],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "RadialPowerExpr":
        try:
            dim = payload["dim"]
            raw_terms = payload["terms"]
            terms = []
            for entry in raw_terms:
                factors = tuple(
                    PowerFactor(Poly.from_json(f["base"]), parse_rational(f["exponent"]))
                    for f in entry.get("factors", []))
                terms.append(RadialTerm(Poly.from_json(entry["coeff_poly"]), factors))
        except (KeyError, TypeError, AttributeError) as e:
            raise MalformedInput(f"Malformed expression JSON: {e}")
        return cls(dim, terms).normalize()

    def __repr__(self) -> str:
        return f"RadialPowerExpr(dim={self.dim}, {self})"

    def __str__(self) -> str:
        canonical = self.normalize()
        if not canonical.terms:
            return "0"
        pieces = []
        for term in canonical.terms:
            factors = "".join(f"*({f.base})^({format_rational(f.exponent)})" for f in term.factors)
            pieces.append(f"({term.coeff_poly}){factors}")
        return " + ".join(pieces)


# kernels


def normalize(expr: RadialPowerExpr) -> RadialPowerExpr:
    """Canonical form of an algebra element"""
    raw: List[Tuple[Poly, Dict[Poly, Fraction]]] = []
    for term in expr.terms:
        if term.coeff_poly.is_zero:
            continue
        exps: Dict[Poly, Fraction] = {}
        for f in term.factors:
            exps[f.base] = exps.get(f.base, Fraction(0)) + f.exponent
        raw.append((term.coeff_poly, exps))

    raw = _fold_bases(raw)

    groups: Dict[Tuple, List[Tuple[Poly, Dict[Poly, Fraction]]]] = {}
    for q, exps in raw:
        for base, g in list(exps.items()):
            if g == 0:
                del exps[base]
            elif g.denominator == 1 and g > 0:
                q = q * base ** int(g)
                del exps[base]
        if q.is_zero:
            continue
        key = tuple(sorted((base.sort_key, _frac(g)) for base, g in exps.items()
                           if g.denominator != 1))
        groups.setdefault(key, []).append((q, exps))

    terms: List[RadialTerm] = []
    for members in groups.values():
        bases: Dict[Poly, None] = {}
        for _, exps in members:
            for base in exps:
                bases.setdefault(base, None)
        lowest: Dict[Poly, Fraction] = {}
        for base in bases:
            values = [exps.get(base, Fraction(0)) for _, exps in members]
            lowest[base] = min(values)
        total = Poly.zero(expr.dim)
        for q, exps in members:
            lifted = q
            for base in bases:
                shift = exps.get(base, Fraction(0)) - lowest[base]
                if shift:
                    lifted = lifted * base ** int(shift)
            total = total + lifted
        if total.is_zero:
            continue
        for base in sorted(bases, key=lambda b: b.sort_key):
            while True:
                g = lowest[base]
                if g.denominator == 1 and g >= 0:
                    break
                quotient = total.try_exact_divide(base)
                if quotient is None:
                    break
                total = quotient
                lowest[base] = g + 1
        factors = tuple(sorted(
            (PowerFactor(base, g) for base, g in lowest.items() if g != 0),
            key=lambda f: f.sort_key))
        terms.append(RadialTerm(total, factors))

    terms.sort(key=lambda t: t.sort_key)
    return RadialPowerExpr(expr.dim, terms, _canonical=True)


def _fold_bases(raw: List[Tuple[Poly, Dict[Poly, Fraction]]]) -> List[Tuple[Poly, Dict[Poly, Fraction]]]:
    """
    Fold constant bases into the coefficient and merge proportional bases
    where the proportionality constant raised to the exponent stays rational
    """
    distinct: List[Poly] = []
    for _, exps in raw:
        for base in exps:
            if base not in distinct:
                distinct.append(base)
    distinct.sort(key=lambda b: b.sort_key)
    representative: Dict[Poly, Tuple[Poly, Fraction]] = {}
    reps: List[Poly] = []
    for base in distinct:
        if base.is_constant:
            continue
        for rep in reps:
            ratio = base.proportionality(rep)
            if ratio is not None:
                representative[base] = (rep, ratio)
                break
        else:
            reps.append(base)

    folded = []
    for q, exps in raw:
        new_exps: Dict[Poly, Fraction] = {}
        for base, g in exps.items():
            target, ratio = base, None
            if base.is_constant:
                ratio = base.constant_term
            elif base in representative:
                target, ratio = representative[base]
            if ratio is not None:
                value = exact_rational_power(ratio, g)
                if value is not None:
                    q = q * value
                    if not base.is_constant:
                        new_exps[target] = new_exps.get(target, Fraction(0)) + g
                    continue
            new_exps[base] = new_exps.get(base, Fraction(0)) + g
        folded.append((q, new_exps))
    return folded


def differentiate(expr: RadialPowerExpr, axis: int) -> RadialPowerExpr:
    """Exact partial derivative, product and chain rule over the bases"""
    terms = []
    for term in expr.normalize().terms:
        q = term.coeff_poly
        dq = q.partial_derivative(axis)
        if dq:
            terms.append(RadialTerm(dq, term.factors))
        for j, f in enumerate(term.factors):
            db = f.base.partial_derivative(axis)
            if db.is_zero:
                continue
            lowered = PowerFactor(f.base, f.exponent - 1)
            factors = term.factors[:j] + (lowered,) + term.factors[j + 1:]
            terms.append(RadialTerm(q * db * f.exponent, factors))
    return RadialPowerExpr(expr.dim, terms).normalize()


def divide_by_last_coordinate(expr: RadialPowerExpr) -> RadialPowerExpr:
    """
    e / x_{n+1} for e odd in x_{n+1}

    The bases are even, so oddness sits in the polynomial parts and each
    must be divisible by x_{n+1} on its own.
    """
    terms = []
    for term in expr.normalize().terms:
        try:
            quotient = term.coeff_poly.divide_by_last()
        except NotDivisible as e:
            raise NotDivisible(f"expression is not divisible by x_{expr.dim}: {e}")
        terms.append(RadialTerm(quotient, term.factors))
    return RadialPowerExpr(expr.dim, terms).normalize()


def invert_poly(poly: Poly) -> Tuple[Poly, int]:
    """
    (Q~, K) with poly(x/|x|^2) = Q~(x) * |x|^{-2K}

    Q~ carries no factor |x|^2.
    """
    if poly.is_zero:
        return poly, 0
    components = homogeneous_components(poly)
    top = max(components)
    r2 = Poly.norm_squared(poly.dim)
    total = Poly.zero(poly.dim)
    for degree, component in components.items():
        total = total + component * r2 ** (top - degree)
    shift = top
    while not total.is_constant:
        quotient = total.try_exact_divide(r2)
        if quotient is None:
            break
        total = quotient
        shift -= 1
    return total, shift


def evaluate(expr: RadialPowerExpr, points) -> Union[float, np.ndarray]:
    """
    Floating evaluation at one point or an (N, d) array of points

    Raises SingularEvaluation when a base is non-positive under a
    fractional or negative exponent.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != expr.dim:
        raise DimensionMismatch(
            f"Points have dimension {pts.shape[1]}, expression has {expr.dim}")
    total = np.zeros(pts.shape[0])
    base_cache: Dict[Poly, np.ndarray] = {}
    for term in expr.normalize().terms:
        value = term.coeff_poly.evaluate(pts)
        for f in term.factors:
            if f.base not in base_cache:
                base_cache[f.base] = f.base.evaluate(pts)
            b = base_cache[f.base]
            g = f.exponent
            if g.denominator != 1 or g < 0:
                if np.any(b <= 0):
                    bad = int(np.argmax(b <= 0))
                    raise SingularEvaluation(
                        f"base {f.base} = {b[bad]:.3g} <= 0 under exponent "
                        f"{format_rational(g)} at {pts[bad].tolist()}")
            if g.denominator == 1:
                value = value * b ** int(g)
            else:
                value = value * np.power(b, float(g))
        total += value
    return float(total[0]) if single else total
