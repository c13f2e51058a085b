"""Request and response bodies for the HTTP service."""

from typing import Literal, Optional

from pydantic import BaseModel, Field


class VerifyRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    parallel: int = Field(1, ge=1)


class RecoverRequest(BaseModel):
    config: dict = Field(default_factory=dict)
    mode: Literal["denoise", "inpaint"] = "denoise"
    parallel: int = Field(1, ge=1)


class DensityRequest(BaseModel):
    config: dict = Field(default_factory=dict)


class CorpusRequest(BaseModel):
    config: dict = Field(default_factory=dict)


class PlotdataRequest(BaseModel):
    # Either a previously produced report, or a config to run first.
    report: Optional[dict] = None
    config: Optional[dict] = None
    kind: Literal["verify", "recover", "density"] = "verify"
    mode: Literal["denoise", "inpaint"] = "denoise"
    parallel: int = Field(1, ge=1)


class SignalPayload(BaseModel):
    name: str
    n: int
    dt: float
    t0: float
    data: str       # base64 of little-endian float64 (re, im) pairs


class ReportResponse(BaseModel):
    report: dict


class ArtifactResponse(BaseModel):
    report: dict
    artifacts: list[SignalPayload]


class PlotdataResponse(BaseModel):
    files: dict[str, str]


class HealthResponse(BaseModel):
    status: str
    format: str
