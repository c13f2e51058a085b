"""HTTP service exposing the verification and recovery drivers.

The CLI talks to this app in-process by default, or over the network when
pointed at a running server; either way the JSON bodies are identical.
Config problems map to 422 with detail.error == "config"; a failed internal
cross-check maps to 500 with detail.error == "assertion".
"""

import tempfile
from pathlib import Path

from fastapi import FastAPI, HTTPException

from ..harness import (ConfigError, OracleMismatchError, emit_plotdata,
                       load_config, run_corpus, run_density, run_recover,
                       run_verify)
from ..io import json_safe, signal_payload
from ..tfcore import FORMAT_VERSION
from . import schemas

app = FastAPI(title="planarsieve", version="0.1.0")


def _config(raw) -> "object":
    try:
        return load_config(raw)
    except ConfigError as exc:
        raise HTTPException(
            status_code=422,
            detail={"error": "config", "message": str(exc)}) from None


def _assertion(exc) -> HTTPException:
    return HTTPException(status_code=500,
                         detail={"error": "assertion", "message": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return {"status": "ok", "format": FORMAT_VERSION}


@app.post("/verify", response_model=schemas.ReportResponse)
def verify(req: schemas.VerifyRequest):
    cfg = _config(req.config)
    try:
        report = run_verify(cfg, parallel=req.parallel)
    except OracleMismatchError as exc:
        raise _assertion(exc) from None
    except ConfigError as exc:
        raise HTTPException(422, {"error": "config",
                                  "message": str(exc)}) from None
    return {"report": json_safe(report)}


@app.post("/recover", response_model=schemas.ArtifactResponse)
def recover(req: schemas.RecoverRequest):
    cfg = _config(req.config)
    try:
        report, artifacts = run_recover(cfg, mode=req.mode,
                                        parallel=req.parallel)
    except ConfigError as exc:
        raise HTTPException(422, {"error": "config",
                                  "message": str(exc)}) from None
    return {"report": json_safe(report),
            "artifacts": [signal_payload(name, sig)
                          for name, sig in artifacts]}


@app.post("/density", response_model=schemas.ReportResponse)
def density(req: schemas.DensityRequest):
    cfg = _config(req.config)
    try:
        report = run_density(cfg)
    except ConfigError as exc:
        raise HTTPException(422, {"error": "config",
                                  "message": str(exc)}) from None
    return {"report": json_safe(report)}


@app.post("/corpus", response_model=schemas.ArtifactResponse)
def corpus(req: schemas.CorpusRequest):
    cfg = _config(req.config)
    try:
        report, artifacts = run_corpus(cfg)
    except ConfigError as exc:
        raise HTTPException(422, {"error": "config",
                                  "message": str(exc)}) from None
    return {"report": json_safe(report),
            "artifacts": [signal_payload(name, sig)
                          for name, sig in artifacts]}


@app.post("/plotdata", response_model=schemas.PlotdataResponse)
def plotdata(req: schemas.PlotdataRequest):
    report = req.report
    if report is None:
        if req.config is None:
            raise HTTPException(422, {
                "error": "config",
                "message": "plotdata needs either a report or a config"})
        cfg = _config(req.config)
        try:
            if req.kind == "verify":
                report = run_verify(cfg, parallel=req.parallel)
            elif req.kind == "recover":
                report, _ = run_recover(cfg, mode=req.mode,
                                        parallel=req.parallel)
            else:
                report = run_density(cfg)
        except OracleMismatchError as exc:
            raise _assertion(exc) from None
        except ConfigError as exc:
            raise HTTPException(422, {"error": "config",
                                      "message": str(exc)}) from None
    try:
        with tempfile.TemporaryDirectory() as tmp:
            paths = emit_plotdata(report, tmp)
            files = {Path(p).name: Path(p).read_text() for p in paths}
    except ConfigError as exc:
        raise HTTPException(422, {"error": "config",
                                  "message": str(exc)}) from None
    return {"files": files}
