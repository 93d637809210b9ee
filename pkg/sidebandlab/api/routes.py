"""REST API endpoints exposing the chain computations."""

from dataclasses import asdict
from typing import Any

import numpy as np
from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from ..config import RunConfig
from ..errors import InvalidArgument, NoSolution
from ..simulation import cavity as cv
from ..simulation import gaussian as gs
from ..simulation.chain import (
    ChainConfig,
    Path,
    baseband_traces,
    epr_state,
    epr_traces,
    loss_budget,
    total_efficiency,
)
from ..simulation.opa import calibrate, pair_count


class TraceRequest(BaseModel):
    """Request model for a trace computation."""

    model_config = ConfigDict(extra="forbid")

    analysis_frequency_hz: float | None = Field(
        None, gt=0, description="Defaults to the configured analysis frequency"
    )
    phase_points: int = Field(
        33, ge=2, le=4096, description="Local oscillator phases over [0, pi]"
    )
    epr: bool = Field(False, description="Include the sideband sum/diff traces")


class CalibrationRequest(BaseModel):
    """Request model for an OPA calibration."""

    model_config = ConfigDict(extra="forbid")

    squeezed_db: float = Field(ge=0, description="Squeezing below the SNL")
    anti_squeezed_db: float = Field(ge=0, description="Anti-squeezing above the SNL")
    analysis_frequency_hz: float = Field(gt=0)
    decay_rate_hz: float = Field(gt=0, description="OPA decay rate gamma")


# Routers for chain and OPA endpoints
router = APIRouter(prefix="/api/chain", tags=["chain"])
opa_router = APIRouter(prefix="/api/opa", tags=["opa"])

# Active configuration (will be injected)
config: RunConfig | None = None
chain: ChainConfig | None = None


def set_config(run_config: RunConfig) -> None:
    """Set the active run configuration.

    Args:
        run_config: Validated configuration; a ``[calibration]`` section is
            applied here
    """
    global config, chain
    chain = run_config.to_chain_config()
    config = run_config


def _active() -> tuple[RunConfig, ChainConfig]:
    if config is None or chain is None:
        raise HTTPException(status_code=503, detail="No configuration loaded")
    return config, chain


@router.get("/geometry")
def get_geometry() -> dict[str, Any]:
    """Return FSR, finesse, linewidth and on-resonance transmission per cavity."""
    run_config, _ = _active()
    cavities = {
        name: {
            "fsr_hz": cv.fsr(spec),
            "finesse": cv.finesse(spec),
            "linewidth_hz": cv.linewidth_fwhm(spec),
            "transmission": cv.suppression(spec, 0.0),
        }
        for name, spec in run_config.cavities().items()
    }
    opa = run_config.opa.to_spec()
    return {
        "cavities": cavities,
        "opa": {
            **opa.to_dict(),
            "geometric_fsr_hz": run_config.opa.geometric_fsr_hz,
            "linewidth_hz": opa.linewidth_fwhm_hz,
            "pair_count": pair_count(opa),
        },
    }


@router.get("/budget")
def get_budget() -> dict[str, Any]:
    """Return per-path stage efficiencies and their totals."""
    _, chain_config = _active()
    return {
        "rows": [row.to_dict() for row in loss_budget(chain_config)],
        "totals": {p.value: total_efficiency(chain_config, p) for p in Path},
    }


@router.get("/duan")
def get_duan(analysis_frequency_hz: float | None = None) -> dict[str, Any]:
    """Return the Duan figure of the detected sideband pair."""
    run_config, chain_config = _active()
    freq = analysis_frequency_hz
    if freq is None:
        freq = run_config.detection.analysis_frequency_hz
    try:
        state = epr_state(chain_config, freq)
    except InvalidArgument as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return {
        **gs.duan_sum(state, 0, 1).to_dict(),
        "log_negativity": gs.log_negativity(state, 0, 1),
        "analysis_frequency_hz": freq,
    }


@router.post("/traces")
def post_traces(request: TraceRequest) -> dict[str, Any]:
    """Compute phase-scanned traces at one analysis frequency."""
    run_config, chain_config = _active()
    freq = request.analysis_frequency_hz
    if freq is None:
        freq = run_config.detection.analysis_frequency_hz
    phases = np.linspace(0.0, np.pi, request.phase_points)
    try:
        result: dict[str, Any] = {
            "baseband": baseband_traces(chain_config, freq, phases).to_dict()
        }
        if request.epr:
            epr = epr_traces(chain_config, freq, phases)
            result["epr_sum"] = epr.sum_traces.to_dict()
            result["epr_diff"] = epr.diff_traces.to_dict()
            result["duan"] = epr.duan.to_dict()
    except InvalidArgument as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return result


@opa_router.post("/calibrate")
def post_calibrate(request: CalibrationRequest) -> dict[str, float]:
    """Invert measured squeezing/anti-squeezing into pump ratio and efficiency."""
    try:
        result = calibrate(
            request.squeezed_db,
            request.anti_squeezed_db,
            request.analysis_frequency_hz,
            request.decay_rate_hz,
        )
    except NoSolution as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return asdict(result)
