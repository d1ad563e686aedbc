"""Stateless JSON-over-HTTP facade for the design engine.

Every endpoint delegates to the same runner functions as the CLI, so a
request body equal to a CLI configuration yields a byte-identical result
payload. Responses use one envelope: exactly one of `result`/`error`,
plus engine metadata.
"""

from __future__ import annotations

import os
import time

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .config import RunConfig
from .correlation import IccBox, IccVector
from .errors import DeadlineExceededError, EngineError, InvalidInputError
from .runner import run_lod, run_mmd, run_sweep, run_variance, validate_icc_report

DEFAULT_DEADLINE_SECONDS = 120.0


def _envelope(result=None, error: dict | None = None, started: float | None = None) -> dict:
    meta = {"engineVersion": __version__}
    if started is not None:
        meta["elapsedMs"] = round((time.perf_counter() - started) * 1000.0, 3)
    if error is not None:
        return {"status": "error", "error": error, "meta": meta}
    return {"status": "ok", "result": result, "meta": meta}


def create_app(deadline_seconds: float | None = None,
               allow_origins: list[str] | None = None) -> FastAPI:
    """Application factory; deadline configurable per deployment."""
    deadline = deadline_seconds
    if deadline is None:
        deadline = float(os.environ.get("CE_LCRT_DEADLINE", DEFAULT_DEADLINE_SECONDS))
    app = FastAPI(title="ce-lcrt", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=allow_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(EngineError)
    async def engine_error_handler(_: Request, exc: EngineError) -> JSONResponse:
        status = 504 if isinstance(exc, DeadlineExceededError) else 422
        return JSONResponse(status_code=status, content=_envelope(error=exc.to_dict()))

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception as exc:
            raise _malformed(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise _malformed("request body must be a JSON object")
        return body

    def _malformed(message: str) -> EngineError:
        exc = InvalidInputError(message)
        exc.status_code = 400
        return exc

    @app.exception_handler(InvalidInputError)
    async def invalid_input_handler(_: Request, exc: InvalidInputError) -> JSONResponse:
        return JSONResponse(status_code=getattr(exc, "status_code", 422),
                            content=_envelope(error=exc.to_dict()))

    @app.get("/api/v1/health")
    async def health() -> dict:
        return _envelope({"status": "ok", "version": __version__})

    @app.post("/api/v1/validate-icc")
    async def validate_icc(request: Request) -> JSONResponse:
        started = time.perf_counter()
        body = await _json_body(request)
        icc = IccVector.from_dict(body["icc"]) if body.get("icc") else None
        box = IccBox.from_dict(body["iccBox"]) if body.get("iccBox") else None
        if icc is None and box is None:
            raise _malformed("provide 'icc' or 'iccBox'")
        try:
            J = int(body["J"])
            K = int(body["K"])
        except (KeyError, TypeError, ValueError) as exc:
            raise _malformed("'J' and 'K' are required integers") from exc
        report = validate_icc_report(icc, box, J, K)
        if not report["ok"]:
            error = {"code": "ICC_CONSTRAINT", "message": "validation failed",
                     "report": report}
            return JSONResponse(status_code=422,
                                content=_envelope(error=error, started=started))
        return JSONResponse(content=_envelope(report, started=started))

    @app.post("/api/v1/variance")
    async def variance(request: Request) -> dict:
        started = time.perf_counter()
        config = RunConfig.from_dict(await _json_body(request))
        return _envelope(run_variance(config), started=started)

    @app.post("/api/v1/lod")
    async def lod(request: Request) -> dict:
        started = time.perf_counter()
        config = RunConfig.from_dict(await _json_body(request))
        return _envelope(run_lod(config), started=started)

    @app.post("/api/v1/mmd")
    async def mmd(request: Request) -> dict:
        started = time.perf_counter()
        body = await _json_body(request)
        config = RunConfig.from_dict(body)
        result = run_mmd(config,
                         want_trace=bool(body.get("trace", False)),
                         deadline_seconds=deadline,
                         model_psd=bool(body.get("modelPsd", False)))
        return _envelope(result, started=started)

    @app.post("/api/v1/sweep")
    async def sweep(request: Request) -> dict:
        started = time.perf_counter()
        body = await _json_body(request)
        config = RunConfig.from_dict(body)
        axis = body.get("axis")
        grid = body.get("grid")
        if not isinstance(axis, str) or not isinstance(grid, list):
            raise _malformed("'axis' (string) and 'grid' (array) are required")
        result = run_sweep(config, axis, [float(x) for x in grid],
                           model_psd=bool(body.get("modelPsd", False)))
        return _envelope(result, started=started)

    return app
