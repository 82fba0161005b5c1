"""HTTP surface: FastAPI routes wrapping the service-layer operations."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..kernels import KernelSolveError
from ..simulate import SimulationDiverged
from . import ops
from . import schemas as sc


def create_app() -> FastAPI:
    app = FastAPI(title="delaystep gain service", version=__version__)

    def guard(fn, req):
        try:
            return fn(req)
        except (KernelSolveError, SimulationDiverged) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (ValueError, FileNotFoundError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/kernels", response_model=sc.KernelsResponse)
    def kernels(req: sc.KernelsRequest):
        return guard(ops.op_kernels, req)

    @app.post("/observer-gains", response_model=sc.ObserverGainsResponse)
    def observer_gains(req: sc.ObserverGainsRequest):
        return guard(ops.op_observer_gains, req)

    @app.post("/simulate", response_model=sc.TrajectoryResponse)
    def simulate(req: sc.SimulateRequest):
        return guard(ops.op_simulate, req)

    @app.post("/verify", response_model=sc.ReportResponse)
    def verify_route(req: sc.VerifyRequest):
        return guard(ops.op_verify, req)

    @app.post("/dataset", response_model=sc.DatasetResponse)
    def dataset(req: sc.DatasetRequest):
        return guard(ops.op_dataset, req)

    @app.post("/infer", response_model=sc.InferResponse)
    def infer(req: sc.InferRequest):
        return guard(ops.op_infer, req)

    @app.post("/bench", response_model=sc.BenchResponse)
    def bench(req: sc.BenchRequest):
        return guard(ops.op_bench, req)

    @app.post("/train-stub", response_model=sc.TrainStubResponse)
    def train_stub(req: sc.TrainStubRequest):
        return guard(ops.op_train_stub, req)

    return app


app = create_app()
