"""HTTP and stdio front ends for a prior responder.

A responder is anything with ``prior(request) -> (probabilities, excluded)``.
Malformed requests get 400; candidate-level contract failures get 422.
"""

from __future__ import annotations

import json
import logging
import sys

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from .protocol import PriorRequest, PriorResponse
from .scripted import ScriptError

log = logging.getLogger(__name__)


def build_app(responder) -> FastAPI:
    app = FastAPI(title="priorserve")

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": list(e.get("loc", ())), "msg": str(e.get("msg", "")),
             "type": e.get("type", "")}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.post("/prior", response_model=PriorResponse, response_model_exclude_none=True)
    def prior(body: PriorRequest):
        try:
            probabilities, excluded = responder.prior(body)
        except ScriptError as exc:
            return JSONResponse(status_code=exc.status, content={"detail": exc.detail})
        return PriorResponse(id=body.id, probabilities=probabilities,
                             excluded=excluded)

    return app


def serve_stdio(responder, stdin=None, stdout=None) -> None:
    """Answer line-delimited requests with identical JSON bodies."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        try:
            request = PriorRequest.model_validate_json(line)
        except ValidationError as exc:
            payload = {"error": f"malformed request: {exc.errors()[:3]}"}
            print(json.dumps(payload), file=stdout, flush=True)
            continue
        try:
            probabilities, excluded = responder.prior(request)
        except ScriptError as exc:
            print(json.dumps({"id": request.id, "error": exc.detail}),
                  file=stdout, flush=True)
            continue
        response = PriorResponse(id=request.id, probabilities=probabilities,
                                 excluded=excluded)
        print(response.model_dump_json(exclude_none=True), file=stdout, flush=True)
