"""FastAPI application exposing the batch operations as endpoints.

Domain errors map to 422 (bad configuration) and numerical failures to
500 with a structured body; the CLI relies on that split for its exit
codes. Run with: uvicorn ringtheta.service.app:app
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..analysis import AnalysisError
from ..detfunc import DetFuncError
from ..dynamics import DynamicsError
from ..labframe import LabFrameError
from ..model import ModelError
from ..spectral import EigensolverError
from . import handlers
from . import schemas as S

CONFIG_ERRORS = (ModelError, DynamicsError, LabFrameError, AnalysisError, ValueError)
NUMERICAL_ERRORS = (EigensolverError, DetFuncError, FloatingPointError, ArithmeticError)

app = FastAPI(
    title="ringtheta",
    version=__version__,
    description="Particle on a discretized circle with a topological angle",
)


def _guard(fn, req):
    try:
        return fn(req)
    except NUMERICAL_ERRORS as exc:
        raise HTTPException(status_code=500, detail={"kind": "numerical", "message": str(exc)})
    except CONFIG_ERRORS as exc:
        raise HTTPException(status_code=422, detail={"kind": "config", "message": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/spectrum", response_model=S.SpectrumResponse)
def spectrum(req: S.SpectrumRequest):
    return _guard(handlers.spectrum, req)


@app.post("/converge", response_model=S.ConvergeResponse)
def converge(req: S.ConvergeRequest):
    return _guard(handlers.converge, req)


@app.post("/dynamics", response_model=S.DynamicsResponse)
def dynamics(req: S.DynamicsRequest):
    return _guard(handlers.run_dynamics, req)


@app.post("/diga", response_model=S.DigaResponse)
def diga(req: S.DigaRequest):
    return _guard(handlers.diga, req)


@app.post("/gy", response_model=S.GyResponse)
def gy(req: S.GyRequest):
    return _guard(handlers.gy, req)


@app.post("/labframe", response_model=S.LabFrameResponse)
def labframe(req: S.LabFrameRequest):
    return _guard(handlers.lab_frame, req)


@app.post("/map-params", response_model=S.MapParamsResponse)
def map_params(req: S.MapParamsRequest):
    return _guard(handlers.map_params, req)


@app.post("/fit", response_model=S.FitResponse)
def fit(req: S.FitRequest):
    return _guard(handlers.fit, req)
