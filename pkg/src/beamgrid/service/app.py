"""FastAPI service wrapping the experiment pipeline.

Endpoints are synchronous: a request runs the corresponding pipeline stage to
completion and returns its artifacts' paths plus machine-readable rows.  The
CLI is a thin client of this app (in-process by default, remote via --server).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, metrics, pipeline, storage
from . import schemas

_DOMAIN_ERRORS = (
    pipeline.ConfigError,
    pipeline.GenerationError,
    storage.FormatError,
    ValueError,
    OSError,
)


def _config_from(request) -> pipeline.ExperimentConfig:
    preset = pipeline.PRESETS.get(request.preset)
    if preset is None:
        raise HTTPException(status_code=400,
                            detail=f"unknown preset {request.preset!r}; "
                                   f"expected one of {sorted(pipeline.PRESETS)}")
    try:
        return pipeline.config_from_kv(request.config, base=preset())
    except pipeline.ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _report_rows(rows) -> list[schemas.ReportRow]:
    return [schemas.ReportRow(value=r["value"], split=r["split"], b=r["b"],
                              atrr=None if r["atrr"] == "" else r["atrr"], n=r["n"])
            for r in rows]


def create_app() -> FastAPI:
    app = FastAPI(title="beamgrid", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/flops", response_model=schemas.FlopsResponse)
    def flops(network: str | None = None):
        rows = pipeline.flops_report()
        if network is not None:
            rows = [r for r in rows if r["network"] == network]
            if not rows:
                raise HTTPException(status_code=400, detail=f"unknown network {network!r}")
        return schemas.FlopsResponse(rows=[schemas.FlopsRow(**r) for r in rows])

    @app.post("/datasets", response_model=schemas.DatasetResponse)
    def build_dataset(request: schemas.DatasetRequest):
        config = _config_from(request)
        if request.samples is not None:
            config.n_samples = request.samples
        if request.seed is not None:
            config.seed = request.seed
        try:
            data, stats = pipeline.build_dataset(config)
            storage.write_container(request.out, data)
        except _DOMAIN_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.DatasetResponse(path=request.out, n_samples=stats["n_samples"],
                                       classes=stats["classes"],
                                       los_fraction=stats["los_fraction"],
                                       split_counts=stats["split_counts"])

    @app.post("/experiments", response_model=schemas.ExperimentResponse)
    def run_experiment(request: schemas.ExperimentRequest):
        config = _config_from(request)
        try:
            result = pipeline.run_experiment(config, request.out_dir,
                                             dataset_path=request.dataset)
        except _DOMAIN_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.ExperimentResponse(
            rows=_report_rows(result.report.rows()),
            history=schemas.HistoryModel(train_loss=result.history.train_loss,
                                         val_accuracy=result.history.val_accuracy),
            top1_accuracy=result.report.top1_accuracy,
            n_excluded=result.report.n_excluded,
            dataset_path=result.dataset_path,
            checkpoint_path=result.checkpoint_path,
            report_csv_path=result.report_csv_path,
            history_csv_path=result.history_csv_path,
            digest=result.digest,
            los_fraction=result.stats["los_fraction"],
        )

    @app.post("/evaluations", response_model=schemas.EvaluateResponse)
    def evaluate(request: schemas.EvaluateRequest):
        try:
            report = pipeline.evaluate_checkpoint(request.checkpoint, request.dataset,
                                                  b_max=request.b_max)
        except _DOMAIN_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.EvaluateResponse(rows=_report_rows(report.rows()),
                                        top1_accuracy=report.top1_accuracy,
                                        n_excluded=report.n_excluded)

    @app.post("/sweeps/sigma", response_model=schemas.SigmaSweepResponse)
    def sweep_sigma(request: schemas.SigmaSweepRequest):
        config = _config_from(request)
        if request.b_max is not None:
            config.b_max = request.b_max
        try:
            results = pipeline.sigma_sweep_run(config, checkpoint_path=request.checkpoint,
                                               sigmas=request.sigmas)
        except _DOMAIN_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return schemas.SigmaSweepResponse(rows=_report_rows(metrics.sweep_rows(results)))

    @app.post("/inspect", response_model=schemas.InspectResponse)
    def inspect(request: schemas.InspectRequest):
        try:
            info = pipeline.inspect_file(request.path)
        except _DOMAIN_ERRORS as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        fmt = info.pop("format")
        return schemas.InspectResponse(format=fmt,
                                       fields={k: str(v) for k, v in info.items()})

    return app


app = create_app()
