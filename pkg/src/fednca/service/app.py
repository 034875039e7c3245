"""FastAPI application exposing the simulator."""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, FedNcaError
from .bench import bench_compression_run, bench_he_run
from .runner import report_run, train_run
from .schemas import (
    BenchCompressionResponse,
    BenchHeResponse,
    BenchRequest,
    HealthResponse,
    ReportRequest,
    ReportSummary,
    TrainRequest,
    TrainSummary,
)


def create_app() -> FastAPI:
    app = FastAPI(title="fednca", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(FedNcaError)
    async def _runtime_error(request: Request, exc: FedNcaError):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/train", response_model=TrainSummary)
    def train(request: TrainRequest) -> TrainSummary:
        return train_run(request.config, request.out_dir)

    @app.post("/bench/he", response_model=BenchHeResponse)
    def bench_he(request: BenchRequest) -> BenchHeResponse:
        return bench_he_run(request.config)

    @app.post("/bench/compression", response_model=BenchCompressionResponse)
    def bench_compression(request: BenchRequest) -> BenchCompressionResponse:
        return bench_compression_run(request.config)

    @app.post("/report", response_model=ReportSummary)
    def report(request: ReportRequest) -> ReportSummary:
        return report_run(request.csv_paths)

    return app


app = create_app()
