"""
Configuration settings for degen-calc
"""
import logging
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


def _env_int(key: str, default: int) -> int:
    raw = os.getenv(key)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {key}={raw!r}, using {default}")
        return default


def _env_float(key: str, default: float) -> float:
    raw = os.getenv(key)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring non-numeric {key}={raw!r}, using {default}")
        return default


class Config:
    """Application configuration"""

    # Parallelism
    THREADS: int = _env_int("DEGEN_CALC_THREADS", min(os.cpu_count() or 1, 8))

    # Logging settings
    LOG_LEVEL: str = os.getenv("DEGEN_CALC_LOG_LEVEL", "INFO")

    # Verification defaults
    SEED: int = _env_int("DEGEN_CALC_SEED", 20240601)
    QUADRATURE_DEGREE: int = _env_int("DEGEN_CALC_QDEG", 16)
    TOLERANCE: float = _env_float("DEGEN_CALC_TOL", 1e-9)
    SAMPLES: int = _env_int("DEGEN_CALC_SAMPLES", 1000)

    # Shrinking-ball extrapolation
    SHRINK_START: float = 0.5
    SHRINK_LEVELS: int = 12
    RADIAL_ORDER: int = 8

    # Operator hypotheses
    ALLOW_SMALL_A: bool = os.getenv(
        "DEGEN_CALC_ALLOW_SMALL_A", "").lower() in ("1", "true", "yes")

    REPORT_SCHEMA_VERSION: int = 1

    @classmethod
    def validate(cls) -> bool:
        """Validate that configuration values are usable"""
        problems = []
        if cls.THREADS < 1:
            problems.append(f"DEGEN_CALC_THREADS must be >= 1 (got {cls.THREADS})")
        if cls.QUADRATURE_DEGREE < 1:
            problems.append(
                f"DEGEN_CALC_QDEG must be >= 1 (got {cls.QUADRATURE_DEGREE})")
        if not cls.TOLERANCE > 0:
            problems.append(f"DEGEN_CALC_TOL must be positive (got {cls.TOLERANCE})")
        if cls.SAMPLES < 1:
            problems.append(f"DEGEN_CALC_SAMPLES must be >= 1 (got {cls.SAMPLES})")
        if cls.LOG_LEVEL.upper() not in logging.getLevelNamesMapping():
            problems.append(f"Unknown DEGEN_CALC_LOG_LEVEL {cls.LOG_LEVEL!r}")

        for problem in problems:
            logger.error(problem)
        return not problems

    @classmethod
    def thread_cap(cls, requested: Optional[int] = None) -> int:
        """Number of worker threads, never above DEGEN_CALC_THREADS"""
        if requested is None:
            return max(1, cls.THREADS)
        return max(1, min(requested, cls.THREADS))


# Global config instance
config = Config()
