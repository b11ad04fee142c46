# app/schemas/estimation.py
import math
from typing import Literal, Optional

from pydantic import BaseModel, Field


class RateEstimate(BaseModel):
    """Estimativa Monte Carlo da taxa de erro lógico P_L"""
    p_hat: float = Field(..., ge=0.0, le=1.0)
    trials: int = Field(..., gt=0)
    failures: int = Field(..., ge=0)
    stderr: float = Field(..., ge=0.0)
    seed: int
    convention: Literal["any", "z_only"] = "any"
    mode: Literal["covered", "decoder"] = "covered"
    pipeline: Literal["erasure", "union_find"] = "erasure"
    cached: bool = False

    @classmethod
    def from_counts(cls, failures: int, trials: int, seed: int, **kwargs) -> "RateEstimate":
        p_hat = failures / trials
        return cls(
            p_hat=p_hat,
            trials=trials,
            failures=failures,
            stderr=math.sqrt(p_hat * (1.0 - p_hat) / trials),
            seed=seed,
            **kwargs,
        )

    def within(self, value: float, sigmas: float = 3.0, floor: Optional[float] = None) -> bool:
        """|p_hat - value| <= sigmas * stderr (com piso opcional para p_hat ~ 0)"""
        tolerance = sigmas * self.stderr
        if floor is not None:
            tolerance = max(tolerance, floor)
        return abs(self.p_hat - value) <= tolerance
