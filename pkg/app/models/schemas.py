# The module provides Pydantic schemas for the benchmark harness and the HTTP API:
# benchmark configuration and records, and request/response models of the endpoints.
# Author: shiboli
# Date: 2025-06-09
# Version: 0.2.0


# -*- coding: utf-8 -*-
"""
Pydantic Schemas for benchmark records and API request and response validation.
"""
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.network import Extension, SchedulerKind

DEFAULT_SIZES = [50, 200]
DEFAULT_RHOS = [0.9, 0.999, 0.99999]


class BenchConfig(BaseModel):
    """Grid of a benchmark run: sizes x topologies x kinds x extensions x rhos."""
    sizes: List[int] = Field(default_factory=lambda: list(DEFAULT_SIZES), min_length=1)
    topologies: int = Field(default=10, ge=1)
    rhos: List[float] = Field(default_factory=lambda: list(DEFAULT_RHOS), min_length=1)
    kinds: List[SchedulerKind] = Field(default_factory=lambda: list(SchedulerKind), min_length=1)
    extensions: List[Extension] = Field(default_factory=lambda: list(Extension), min_length=1)
    seed: int = Field(default=0, ge=0)
    trials: Optional[int] = Field(
        default=None, ge=0,
        description="Monte-Carlo trials per record; 0 disables, None uses the size-based default.",
    )
    format: Literal["csv", "json"] = "csv"
    out: Optional[str] = None
    scenario: Optional[str] = Field(default=None, description="Run on this scenario file instead of generating topologies.")
    snr_db: Optional[float] = Field(default=None, description="Reference SNR; defaults to CHANNEL_SNR_DB.")
    timing_strict: bool = False
    workers: int = Field(default=1, ge=1)

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, value: List[int]) -> List[int]:
        if any(n < 2 for n in value):
            raise ValueError("topology sizes must be at least 2")
        return value

    @field_validator("rhos")
    @classmethod
    def _rhos(cls, value: List[float]) -> List[float]:
        if any(not 0.0 <= rho < 1.0 for rho in value):
            raise ValueError("reliability bounds must lie in [0, 1)")
        return value


class BenchRecord(BaseModel):
    """One (size, seed, kind, extension, rho) cell. rho is None for plain scheduling."""
    size: int
    seed: int
    kind: SchedulerKind
    extension: Extension
    rho: Optional[float] = None
    status: Literal["ok", "failed"] = "ok"
    reason: Optional[str] = None
    frame_slots: Optional[int] = Field(default=None, ge=0)
    transmissions: Optional[int] = Field(default=None, ge=0)
    runtime_ms: Optional[float] = Field(default=None, ge=0)
    increment_ms: Optional[float] = Field(default=None, ge=0)
    max_tau: Optional[int] = None
    analytic_bound: Optional[float] = None
    exact_reliability: Optional[float] = None
    empirical_rate: Optional[float] = None
    ci_half_width: Optional[float] = None
    valid: Optional[bool] = None
    snr_db: float = 60.0

    @model_validator(mode="after")
    def _check_status(self) -> "BenchRecord":
        if self.status == "ok" and self.frame_slots is None:
            raise ValueError("successful records need a frame size")
        if self.status == "failed" and not self.reason:
            raise ValueError("failed records need a reason")
        return self


# Fixed CSV column order (documented in the README).
RECORD_COLUMNS = list(BenchRecord.model_fields)


class ScheduleRequest(BaseModel):
    """The request model for the /schedule endpoint."""
    size: int = Field(default=50, ge=2, le=1000, examples=[50])
    seed: int = Field(default=1, ge=0, examples=[1])
    kind: SchedulerKind = Field(default=SchedulerKind.NODE_BASED, examples=["node-based"])
    extension: Extension = Field(default=Extension.SCHEDEX, examples=["schedex"])
    rho: float = Field(default=0.9, ge=0, lt=1, examples=[0.9])
    snr_db: Optional[float] = None
    trials: int = Field(default=0, ge=0, le=1_000_000, description="Monte-Carlo trials; 0 skips verification.")
    preview_slots: int = Field(default=20, ge=0, description="Number of slots rendered in the response.")


class ScheduleResponse(BaseModel):
    """The response model for a scheduled cell."""
    status: str = "success"
    record: BenchRecord
    routing: Dict[int, Optional[int]] = Field(default_factory=dict, description="Routing parent of every transceiver.")
    repetition: Optional[Dict[int, int]] = Field(default=None, description="tau_t per transceiver (SchedEx only).")
    frame_preview: List[str] = Field(default_factory=list, description="First slots of the frame, 1-based.")


class BenchmarkAccepted(BaseModel):
    """Response model for a benchmark run scheduled in the background."""
    message: str
    output_path: str
    cells: int


class ErrorResponse(BaseModel):
    """The response model for an error."""
    status: str = "error"
    message: str


if __name__ == "__main__":
    print(BenchConfig().model_dump_json(indent=2))
    example_record = BenchRecord(
        size=50, seed=1, kind=SchedulerKind.NODE_BASED, extension=Extension.SCHEDEX,
        rho=0.9, frame_slots=736, runtime_ms=5.0, analytic_bound=0.93,
    )
    print(example_record.model_dump_json(indent=2))
    print(ErrorResponse(message="Invalid input parameters.").model_dump_json(indent=2))
