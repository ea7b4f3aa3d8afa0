"""
Run configuration

Every CLI invocation is validated into a RunConfig before any computation
starts, so bad parameters fail fast with exit code 1.
"""

import math
from pathlib import Path
from typing import Any, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ..core.bounds import check_lemma_preconditions
from ..core.errors import InputError, PreconditionError
from ..core.estimators import ESTIMATORS

Subcommand = Literal["bound", "pack", "certify", "simulate", "compare", "bernstein"]

MAX_SEED = 2**64 - 1

# Subcommands that build packings and so need k even and k < n/2.
_LEMMA_COMMANDS = {"pack", "compare", "bernstein"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    subcommand: Subcommand
    matrix_path: Optional[Path] = None
    packing_path: Optional[Path] = None
    recipe: Optional[str] = None
    n: Optional[int] = None
    k: Optional[int] = None
    m_values: Tuple[int, ...] = ()
    sigma: float = 1.0
    size: Optional[int] = None
    reps: Optional[int] = None
    seed: int = 0
    trials: Optional[int] = None
    estimator: Optional[str] = None
    level: Optional[float] = None
    support: Optional[Tuple[int, ...]] = None
    signal_norm: Optional[float] = None
    out: Optional[Path] = None
    output_format: Literal["json", "text", "csv"] = "json"

    @field_validator("seed")
    @classmethod
    def seed_in_range(cls, v: int) -> int:
        if not 0 <= v <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {v}")
        return v

    @field_validator("n", "k")
    @classmethod
    def positive_dimension(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"must be a positive integer, got {v}")
        return v

    @field_validator("m_values")
    @classmethod
    def positive_rows(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(m < 1 for m in v):
            raise ValueError(f"every m must be positive, got {list(v)}")
        return v

    @field_validator("trials")
    @classmethod
    def at_least_two_trials(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 2:
            raise ValueError(f"need at least 2 trials, got {v}")
        return v

    @field_validator("size")
    @classmethod
    def at_least_two_points(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 2:
            raise ValueError(f"a packing needs at least 2 points, got {v}")
        return v

    @field_validator("reps")
    @classmethod
    def at_least_two_reps(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 2:
            raise ValueError(f"need at least 2 repetitions, got {v}")
        return v

    @field_validator("level", "signal_norm")
    @classmethod
    def positive_scale(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not (v > 0 and math.isfinite(v)):
            raise ValueError(f"must be positive and finite, got {v}")
        return v

    @model_validator(mode="after")
    def check_subcommand(self) -> "RunConfig":
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be finite and non-negative, got {self.sigma}")
        if self.sigma == 0 and self.subcommand != "simulate":
            raise ValueError("sigma must be positive")

        if self.subcommand in _LEMMA_COMMANDS and self.recipe is None:
            if self.n is None or self.k is None:
                raise ValueError(f"{self.subcommand} needs --n and --k")
            try:
                check_lemma_preconditions(self.n, self.k)
            except PreconditionError as e:
                raise ValueError(str(e)) from None

        if self.subcommand == "compare" and self.recipe is None and not self.m_values:
            raise ValueError("compare needs at least one --m")

        if self.subcommand in {"bound", "simulate"} and self.matrix_path is None:
            raise ValueError(f"{self.subcommand} needs a matrix file")
        if self.subcommand == "certify" and self.recipe is None:
            if self.matrix_path is None or self.packing_path is None:
                raise ValueError("certify needs a matrix file and a packing file, or --recipe")

        if self.subcommand == "simulate":
            if self.estimator not in ESTIMATORS:
                raise ValueError(f"estimator must be one of {', '.join(ESTIMATORS)}, got {self.estimator!r}")
            if self.packing_path is not None:
                if self.level is None:
                    raise ValueError("--packing needs --level")
                if self.support is not None:
                    raise ValueError("--support and --packing are mutually exclusive")
            elif self.k is None and self.support is None:
                raise ValueError("simulate needs --k or --support")
            if self.support is not None:
                if len(set(self.support)) != len(self.support) or min(self.support) < 0:
                    raise ValueError(f"support must hold distinct non-negative indices, got {list(self.support)}")
                if self.k is not None and len(self.support) != self.k:
                    raise ValueError(f"support has {len(self.support)} indices but k={self.k}")
        return self

    @classmethod
    def build(cls, **values: Any) -> "RunConfig":
        """Validate, turning pydantic errors into InputError."""
        try:
            return cls(**values)
        except ValidationError as e:
            problems = "; ".join(_describe(err) for err in e.errors())
            raise InputError(f"invalid arguments: {problems}") from None


def _describe(err: dict) -> str:
    loc = ".".join(str(p) for p in err.get("loc", ()) if p != "__root__")
    msg = err.get("msg", "invalid value")
    if msg.startswith("Value error, "):
        msg = msg[len("Value error, "):]
    return f"{loc}: {msg}" if loc else msg


def parse_index_list(text: Optional[str]) -> Optional[Tuple[int, ...]]:
    """'0,3,5' -> (0, 3, 5)."""
    if text is None:
        return None
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None
