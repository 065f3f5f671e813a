"""
===============================================================================
    Module Name: Settings
    Description:  Run configuration for the catalytic entropy toolkit. Holds the
                  numerical tolerance record shared by every module and the
                  per-invocation RunConfig assembled by the command line.
                  Tolerances resolve in the order: explicit override, CE_TOL
                  environment variable (a .env file is honoured), defaults.

    Created Date: 2024-09-16
    Last Updated: 2024-10-02
    Version:      1.0.0

    License:      GNU General Public License v3.0

    Usage:        from settings import Tolerances, load_tolerances
                  tol = load_tolerances()            # env / defaults
                  tol = load_tolerances(1e-8)        # explicit override

    Requirements: Python 3.10.12, pydantic, python-dotenv
===============================================================================
"""

import math
import os
from enum import Enum
from typing import Optional

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator


TOLERANCE_ENV_VAR = "CE_TOL"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    YAML = "yaml"


class LogBase(str, Enum):
    BITS = "2"
    NATS = "e"


class Tolerances(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol_herm: float = Field(default=1e-9, gt=0)     # max |A - A^dagger|
    tol_psd: float = Field(default=1e-9, gt=0)      # most negative eigenvalue accepted
    tol_unitary: float = Field(default=1e-9, gt=0)  # max |B^dagger B - I|
    tol_norm: float = Field(default=1e-10, gt=0)    # |trace - 1|

    @classmethod
    def uniform(cls, value: float) -> "Tolerances":
        return cls(tol_herm=value, tol_psd=value, tol_unitary=value, tol_norm=value)

    def to_dict(self):
        return self.model_dump()


DEFAULT_TOLERANCES = Tolerances()


def load_tolerances(override: Optional[float] = None) -> Tolerances:
    if override is not None:
        logger.debug("Using explicit tolerance override: {}", override)
        return Tolerances.uniform(override)

    load_dotenv(override=False)
    raw = os.environ.get(TOLERANCE_ENV_VAR)
    if raw:
        try:
            value = float(raw)
        except ValueError:
            logger.warning("Ignoring non-numeric {}={!r}", TOLERANCE_ENV_VAR, raw)
            return DEFAULT_TOLERANCES
        logger.debug("Using {} tolerance: {}", TOLERANCE_ENV_VAR, value)
        return Tolerances.uniform(value)
    return DEFAULT_TOLERANCES


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: str
    tolerances: Tolerances = DEFAULT_TOLERANCES
    seed: int = 0
    base: LogBase = LogBase.BITS
    format: OutputFormat = OutputFormat.JSON
    out: Optional[str] = None
    log_level: str = "INFO"
    log_file: Optional[str] = None

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()

    @property
    def log_base(self) -> float:
        return 2.0 if self.base == LogBase.BITS else math.e
