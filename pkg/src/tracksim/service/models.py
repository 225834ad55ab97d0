"""Pydantic models for the HTTP API."""
from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class TrialRequest(BaseModel):
    scenario: str = Field(description="built-in scenario name or inline script")
    script: Optional[dict] = Field(default=None, description="inline scenario script")
    seed: int = 0
    config: Optional[dict] = Field(default=None, description="config overrides")
    include_trace: bool = False


class EpisodeModel(BaseModel):
    loss_time: float
    restored: bool
    restore_time: Optional[float] = None


class MetricsModel(BaseModel):
    episodes: list[EpisodeModel]
    success_ratio: Optional[float] = None
    tracking_ratio: float
    restoring_times: list[float]
    average_restoring_time: Optional[float] = None
    failure_time: Optional[float] = None
    duration: float
    ticks: int
    action_outcomes: dict[str, dict[str, int]] = {}


class TrialResponse(BaseModel):
    scenario: str
    seed: int
    metrics: MetricsModel
    trace_sha256: str
    trace: Optional[str] = Field(default=None, description="json-lines trace text")


class BatchRequest(BaseModel):
    scenario: str
    script: Optional[dict] = None
    trials: int = Field(default=20, ge=1, le=10_000)
    seed: int = 0
    config: Optional[dict] = None


class BatchResponse(BaseModel):
    report: dict


class SuiteRequest(BaseModel):
    scenarios: list[str] = Field(min_length=1, description="built-in scenario names")
    trials: int = Field(default=20, ge=1, le=10_000)
    seed: int = 0
    config: Optional[dict] = None


class ReplayRequest(BaseModel):
    trace: str = Field(description="json-lines trace text")


class ScenarioInfo(BaseModel):
    name: str
    duration: float
    seed: int
    events: int


class VersionInfo(BaseModel):
    version: str
    protocol: int


class ErrorDetail(BaseModel):
    detail: str
    problems: list[str] = []
