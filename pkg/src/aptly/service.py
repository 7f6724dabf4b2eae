"""HTTP service exposing parse/compile/decompile/generate/edit.

Status mapping keeps the three failure families distinguishable:

* 400 — the request or its code/description is invalid (diagnostics),
* 422 — the model's output failed parse/validate after retries
         (diagnostics plus raw completions for manual rescue),
* 502 — the completion backend itself failed,
* 429 — too many generations in flight.

Pure endpoints (parse/compile/decompile) are deterministic: identical
requests produce byte-identical bodies.
"""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import blocks as blockmod
from .backends import CompletionBackend, NearestEchoBackend
from .config import ServiceConfig, make_backend
from .diagnostics import (
    AptlyError,
    BackendError,
    Diagnostic,
    E_BAD_REQUEST,
    GenerationError,
    RequestError,
)
from .genpipe import EditRequest, GenerationRequest, edit, generate
from .parser import parse
from .printer import canonical_print
from .registry import Registry, load_registry, load_seed_registry, validate
from .retrieval import Corpus, MockEmbedder, corpus_build, corpus_load


class ParseBody(BaseModel):
    code: str


class CompileBody(BaseModel):
    code: str


class DecompileBody(BaseModel):
    blocks: dict


class GenerateBody(BaseModel):
    description: str
    k: Optional[int] = None
    model: Optional[str] = None


class EditBody(BaseModel):
    code: str
    instruction: str
    k: Optional[int] = None
    model: Optional[str] = None


def _diag_obj(diag: Diagnostic) -> dict:
    return {
        "code": diag.code,
        "message": diag.message,
        "line": diag.span.line,
        "column": diag.span.column,
        "length": diag.span.length,
        "severity": diag.severity,
    }


def _diag_body(diags) -> dict:
    return {"diagnostics": [_diag_obj(d) for d in diags]}


class _GenerationGate:
    """Counting gate: immediate 429 once the cap is reached."""

    def __init__(self, limit: int):
        self._limit = limit
        self._lock = threading.Lock()
        self._active = 0

    def try_enter(self) -> bool:
        with self._lock:
            if self._active >= self._limit:
                return False
            self._active += 1
            return True

    def leave(self) -> None:
        with self._lock:
            self._active -= 1


def create_app(
    config: Optional[ServiceConfig] = None,
    *,
    registry: Optional[Registry] = None,
    corpus: Optional[Corpus] = None,
    backend: Optional[CompletionBackend] = None,
) -> FastAPI:
    """Build the service app; explicit arguments override the config."""
    if registry is None:
        if config and config.registry_path:
            registry = load_registry(config.registry_path)
        else:
            registry = load_seed_registry()
    if corpus is None and config is not None:
        corpus = corpus_load(config.corpus_path, registry)
    if corpus is not None:
        corpus = corpus_build(corpus, MockEmbedder(corpus.dimension))
    if backend is None:
        backend = make_backend(config) if config else NearestEchoBackend()

    default_k = config.default_k if config else 3
    default_model = config.default_model if config else "default"
    cap = config.max_concurrent_generations if config else 4

    app = FastAPI(title="aptly service")
    app.state.registry = registry
    app.state.corpus = corpus
    app.state.backend = backend
    app.state.gate = _GenerationGate(cap)

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        diags = [
            Diagnostic(E_BAD_REQUEST, f"invalid request body: {err['msg']}")
            for err in exc.errors()
        ] or [Diagnostic(E_BAD_REQUEST, "invalid request body")]
        return JSONResponse(status_code=400, content=_diag_body(diags))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/v1/components")
    def components():
        listing = {}
        for name, schema in sorted(registry.schemas.items()):
            listing[name] = {
                "visible": schema.visible,
                "container": schema.container,
                "properties": dict(sorted(schema.properties.items())),
                "events": {e: list(p) for e, p in sorted(schema.events.items())},
                "methods": {
                    m: {"params": list(sig.params), "has_result": sig.has_result}
                    for m, sig in sorted(schema.methods.items())
                },
            }
        builtins = {
            name: {"arity": sig.arity, "has_result": sig.has_result}
            for name, sig in sorted(registry.builtins.items())
        }
        return {"version": 1, "components": listing, "builtins": builtins}

    @app.post("/v1/parse")
    def parse_endpoint(body: ParseBody):
        try:
            program = parse(body.code)
        except AptlyError as err:
            return JSONResponse(status_code=400, content=_diag_body(err.diagnostics))
        diags = validate(program, registry)
        if diags:
            return JSONResponse(status_code=400, content=_diag_body(diags))
        return {
            "ast_summary": {
                "components": len(program.components),
                "globals": len(program.globals),
                "procedures": len(program.procedures),
                "handlers": len(program.handlers),
            }
        }

    @app.post("/v1/compile")
    def compile_endpoint(body: CompileBody):
        try:
            program = parse(body.code)
            diags = validate(program, registry)
            if diags:
                return JSONResponse(status_code=400, content=_diag_body(diags))
            block_program = blockmod.compile_program(program, registry)
        except AptlyError as err:
            return JSONResponse(status_code=400, content=_diag_body(err.diagnostics))
        # Round through the canonical serialization so the body mirrors the
        # document format exactly (sorted keys, stable bytes).
        return {"blocks": json.loads(blockmod.blocks_to_json(block_program))}

    @app.post("/v1/decompile")
    def decompile_endpoint(body: DecompileBody):
        try:
            block_program = blockmod.blocks_from_obj(body.blocks)
            program = blockmod.decompile_program(block_program, registry)
        except AptlyError as err:
            return JSONResponse(status_code=400, content=_diag_body(err.diagnostics))
        return {"code": canonical_print(program)}

    class _TooBusy(Exception):
        pass

    @contextmanager
    def _gated():
        if not app.state.gate.try_enter():
            raise _TooBusy()
        try:
            yield
        finally:
            app.state.gate.leave()

    def _generation_envelope(fn):
        if corpus is None:
            return JSONResponse(
                status_code=400,
                content=_diag_body(
                    [Diagnostic(E_BAD_REQUEST, "service has no corpus configured")]
                ),
            )
        try:
            with _gated():
                result = fn()
        except _TooBusy:
            return JSONResponse(
                status_code=429,
                content=_diag_body(
                    [Diagnostic(E_BAD_REQUEST, "too many generations in flight")]
                ),
            )
        except RequestError as err:
            return JSONResponse(status_code=400, content=_diag_body(err.diagnostics))
        except BackendError as err:
            return JSONResponse(status_code=502, content=_diag_body(err.diagnostics))
        except GenerationError as err:
            body = _diag_body(err.diagnostics)
            body["raw_completions"] = list(err.raw_completions)
            body["attempts"] = err.attempts
            return JSONResponse(status_code=422, content=body)
        except AptlyError as err:
            return JSONResponse(status_code=400, content=_diag_body(err.diagnostics))
        return {
            "code": result.code,
            "examples_used": list(result.examples_used),
            "attempts": result.attempts,
        }

    @app.post("/v1/generate")
    def generate_endpoint(body: GenerateBody):
        def run():
            request = GenerationRequest(
                description=body.description,
                corpus=app.state.corpus,
                k=body.k if body.k is not None else default_k,
                model=body.model or default_model,
            )
            return generate(request, registry, app.state.backend)

        return _generation_envelope(run)

    @app.post("/v1/edit")
    def edit_endpoint(body: EditBody):
        def run():
            request = EditRequest(
                current_code=body.code,
                instruction=body.instruction,
                corpus=app.state.corpus,
                k=body.k if body.k is not None else default_k,
                model=body.model or default_model,
            )
            return edit(request, registry, app.state.backend)

        return _generation_envelope(run)

    if config and config.ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
