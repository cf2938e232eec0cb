"""HTTP service exposing the analysis and simulation pipelines.

Sync handlers on purpose: the pipelines are CPU-bound, and FastAPI runs sync
endpoints on its thread pool, keeping the event loop responsive. Domain
errors (bad configuration, infeasible operating point, failed searches) map
to 400 with the message; anything else is a genuine 500.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import apply_overrides, default_config, validate_config
from ..params import ConfigurationError, InfeasibleOperatingPointError
from ..stability import (EigenTrackingError, MarginalStabilityError,
                         SearchDomainError)
from ..workflows import RUNNERS
from .schemas import HealthResponse, RunRequest

_DOMAIN_ERRORS = (ConfigurationError, InfeasibleOperatingPointError,
                  SearchDomainError, MarginalStabilityError,
                  EigenTrackingError, ValueError)


def _resolve(req: RunRequest):
    data = req.config.provided() if req.config is not None else {}
    cfg = validate_config(data) if data else default_config()
    return apply_overrides(cfg, req.overrides)


def _run(command: str, req: RunRequest) -> dict:
    try:
        cfg = _resolve(req)
        return RUNNERS[command](cfg)
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(status_code=400,
                            detail=f"{type(exc).__name__}: {exc}") from exc


def build_app() -> FastAPI:
    app = FastAPI(title="vscstab", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/analyze/bode")
    def analyze_bode(req: RunRequest) -> dict:
        return _run("bode", req)

    @app.post("/analyze/nyquist")
    def analyze_nyquist(req: RunRequest) -> dict:
        return _run("nyquist", req)

    @app.post("/analyze/passivity")
    def analyze_passivity(req: RunRequest) -> dict:
        return _run("passivity", req)

    @app.post("/analyze/marginal")
    def analyze_marginal(req: RunRequest) -> dict:
        return _run("marginal", req)

    @app.post("/sim/measure")
    def sim_measure(req: RunRequest) -> dict:
        return _run("measure", req)

    @app.post("/sim/simulate")
    def sim_simulate(req: RunRequest) -> dict:
        return _run("simulate", req)

    @app.post("/verify")
    def verify(req: RunRequest) -> dict:
        return _run("verify", req)

    return app


app = build_app()
