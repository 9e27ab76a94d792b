import hashlib
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, List, Optional, Sequence, TypeVar, Union

import numpy as np
from sympy import integer_nthroot

from src.config import Config
from src.exceptions import MalformedInput

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

RationalLike = Union[int, str, Fraction]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(value: Any) -> Fraction:
    """
    Parse an exact rational

    Accepts ints, Fractions and strings of the form "num" or "num/den".
    Decimal strings and floats are rejected; write "3/2" instead of "1.5".
    """
    if isinstance(value, bool):
        raise MalformedInput(f"Not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if not match:
            raise MalformedInput(
                f"Not a rational string: {value!r} (use 'num' or 'num/den')")
        num, den = match.group(1), match.group(2)
        if den is not None and int(den) == 0:
            raise MalformedInput(f"Zero denominator in {value!r}")
        return Fraction(int(num), int(den) if den is not None else 1)
    raise MalformedInput(f"Not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def exact_rational_power(base: Fraction, exponent: Fraction) -> Optional[Fraction]:
    """base**exponent as an exact rational, or None when it is irrational"""
    base = Fraction(base)
    exponent = Fraction(exponent)
    if exponent.denominator == 1:
        if base == 0 and exponent < 0:
            return None
        return base ** exponent.numerator
    if base <= 0:
        return None
    q = exponent.denominator
    num_root, num_exact = integer_nthroot(base.numerator, q)
    den_root, den_exact = integer_nthroot(base.denominator, q)
    if not (num_exact and den_exact):
        return None
    return Fraction(int(num_root), int(den_root)) ** exponent.numerator


def make_rng(seed: Optional[int] = None) -> np.random.Generator:
    """Counter-based generator so streams agree across platforms"""
    return np.random.Generator(np.random.Philox(Config.SEED if seed is None else seed))


def sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float,
                min_radius: float = 0.0, min_last: float = 0.0) -> np.ndarray:
    """
    Uniform points in the ball of the given radius

    Points closer than min_radius to the origin or with |x_{n+1}| below
    min_last are redrawn.
    """
    points = np.empty((0, dim))
    while points.shape[0] < count:
        batch = max(2 * (count - points.shape[0]), 16)
        direction = rng.standard_normal((batch, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radii = radius * rng.random(batch) ** (1.0 / dim)
        candidates = direction * radii[:, None]
        keep = (np.linalg.norm(candidates, axis=1) > min_radius) & (
            np.abs(candidates[:, -1]) > min_last)
        points = np.vstack([points, candidates[keep]])
    return points[:count]


def parallel_map(fn: Callable[[T], R], items: Sequence[T],
                 max_workers: Optional[int] = None) -> List[R]:
    """Map over items on a thread pool capped by DEGEN_CALC_THREADS, preserving order"""
    workers = Config.thread_cap(max_workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def chunked(points: np.ndarray, chunks: int) -> List[np.ndarray]:
    chunks = max(1, min(chunks, points.shape[0]))
    return [chunk for chunk in np.array_split(points, chunks) if chunk.shape[0]]


def pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction"""
    values = np.asarray(values, dtype=float).ravel()
    while values.size > 1:
        if values.size % 2:
            values = np.append(values, 0.0)
        values = values[0::2] + values[1::2]
    return float(values[0]) if values.size else 0.0


def digest(payload: Any) -> str:
    """sha256 over canonical JSON"""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
