"""
Shared data models: operator parameters, suite configuration and reports
"""
import json
import logging
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any, ClassVar, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_serializer, field_validator, model_validator

from src.config import Config
from src.exceptions import InvalidParams
from src.utils import digest, format_rational, parse_rational

logger = logging.getLogger(__name__)


class OperatorParams(BaseModel):
    """(n, a, p) for the weighted operator and the polyharmonic problem"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=1, description="Number of tangential variables x_1..x_n")
    a: Fraction = Field(description="Weight parameter, exact rational, a >= 1")
    p: int = Field(default=1, ge=1, description="Order of the polyharmonic problem")
    allow_small_a: bool = Field(
        default=False, description="Accept 0 < a < 1 (outside the stated hypotheses)")

    @field_validator("a", mode="before")
    @classmethod
    def _parse_a(cls, value: Any) -> Fraction:
        if isinstance(value, float):
            raise InvalidParams(
                f"a must be an exact rational such as '3/2' (got float {value!r}); "
                f"real or irrational a is not supported")
        return parse_rational(value)

    @model_validator(mode="after")
    def _check_constraints(self) -> "OperatorParams":
        if self.a <= 0:
            raise InvalidParams(f"a must be positive (got {format_rational(self.a)})")
        if self.a < 1:
            if not (self.allow_small_a or Config.ALLOW_SMALL_A):
                raise InvalidParams(
                    f"a must be >= 1 (got {format_rational(self.a)}); "
                    "set allow_small_a or DEGEN_CALC_ALLOW_SMALL_A to override")
            logger.warning(f"Using a={format_rational(self.a)} < 1, outside the a >= 1 hypothesis")
        if not 2 * self.p < self.n + 2 * self.a:
            raise InvalidParams(
                f"need 2p < n+2a (got p={self.p}, n={self.n}, a={format_rational(self.a)})")
        return self

    @field_serializer("a")
    def _serialize_a(self, value: Fraction) -> str:
        return format_rational(value)

    @property
    def dim(self) -> int:
        """Ambient dimension n+1"""
        return self.n + 1

    @property
    def D(self) -> Fraction:
        """Effective dimension n+2a"""
        return self.n + 2 * self.a

    @property
    def s(self) -> Fraction:
        """Bubble exponent (n+2a-2p)/2"""
        return (self.D - 2 * self.p) / 2

    @property
    def kelvin_exponent(self) -> Fraction:
        """2p-n-2a"""
        return 2 * self.p - self.D

    @property
    def alpha_crit(self) -> Fraction:
        return (self.D + 2 * self.p) / (self.D - 2 * self.p)

    def tau(self, alpha: Fraction) -> Fraction:
        return (self.D + 2 * self.p) - Fraction(alpha) * (self.D - 2 * self.p)

    def with_p(self, p: int) -> "OperatorParams":
        return OperatorParams(n=self.n, a=self.a, p=p, allow_small_a=self.allow_small_a)

    def label(self) -> str:
        return f"n={self.n}, a={format_rational(self.a)}, p={self.p}"


class SuiteConfig(BaseModel):
    """Validated inputs for one CLI suite run"""
    # suites that only use (n, a) when they form valid operator parameters
    OPTIONAL_PARAMS: ClassVar[frozenset] = frozenset({"growth"})

    command: str = Field(description="Name of the suite")
    n: int = Field(default=1, ge=1, description="Tangential dimension")
    a: str = Field(default="1", description="Weight parameter as a rational string")
    p: int = Field(default=1, ge=1, description="Order of the problem")
    alpha: Optional[str] = Field(
        default=None, description="Exponent alpha as a rational string; critical when omitted")
    poly_path: Optional[str] = Field(default=None, description="Polynomial JSON input")
    quadrature_degree: int = Field(
        default_factory=lambda: Config.QUADRATURE_DEGREE, ge=1,
        description="Declared exactness degree of the weighted sphere rule")
    samples: int = Field(default_factory=lambda: Config.SAMPLES, ge=1,
                         description="Number of random sample points")
    seed: int = Field(default_factory=lambda: Config.SEED, description="Random seed")
    tolerance: float = Field(default_factory=lambda: Config.TOLERANCE, gt=0,
                             description="Relative tolerance override")
    k_max: int = Field(default=30, ge=0, le=64, description="Growth recursion length")
    r0: float = Field(default=1.0, gt=0, description="Initial radius of the growth trace")

    @field_validator("a")
    @classmethod
    def _check_a(cls, value: str) -> str:
        parse_rational(value)
        return value

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parse_rational(value)
        return value

    @model_validator(mode="after")
    def _check_params(self) -> "SuiteConfig":
        if self.command not in self.OPTIONAL_PARAMS:
            self.operator_params()
        return self

    def operator_params(self) -> OperatorParams:
        return OperatorParams(n=self.n, a=self.a, p=self.p)

    def alpha_value(self) -> Fraction:
        if self.alpha is None:
            return self.operator_params().alpha_crit
        return parse_rational(self.alpha)


class CheckResult(BaseModel):
    """Outcome of one named verification"""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    name: str = Field(description="Check name")
    passed: bool = Field(description="Whether the check passed")
    residual: Optional[float] = Field(default=None, description="Headline residual, if any")
    details: Dict[str, Any] = Field(default_factory=dict, description="Check-specific data")


class SuiteReport(BaseModel):
    """Machine-readable report emitted by the CLI"""
    model_config = ConfigDict(ser_json_inf_nan="constants")

    schema_version: int = Field(default=Config.REPORT_SCHEMA_VERSION)
    command: str = Field(description="Suite that produced the report")
    inputs_digest: str = Field(description="sha256 of the canonical suite configuration")
    created_at: str = Field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(),
        description="Timestamp; excluded from the digest")
    checks: List[CheckResult] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @classmethod
    def for_config(cls, suite: SuiteConfig) -> "SuiteReport":
        return cls(command=suite.command, inputs_digest=digest(suite.model_dump()))

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, allow_nan=True)
