"""Command-line interface.

Exit codes: 0 success, 1 user/validation error (diagnostics on stderr),
2 configuration error, 3 backend error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import blocks as blockmod
from .backends import NearestEchoBackend, scripted_from_file
from .config import load_config, make_backend
from .diagnostics import (
    AptlyError,
    BackendError,
    ConfigError,
    E_CONFIG,
    GenerationError,
)
from .genpipe import EditRequest, GenerationRequest, edit, generate
from .parser import parse
from .printer import canonical_print
from .registry import load_registry, load_seed_registry, validate
from .retrieval import MockEmbedder, corpus_build, corpus_load, corpus_save

EXIT_OK = 0
EXIT_USER = 1
EXIT_CONFIG = 2
EXIT_BACKEND = 3

_SAMPLES = Path(__file__).parent / "data" / "samples"


def _print_diagnostics(err: AptlyError, origin: str = "") -> None:
    prefix = f"{origin}:" if origin else ""
    for diag in err.diagnostics:
        print(f"{prefix}{diag.render()}", file=sys.stderr)


def _write_out(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_registry(args):
    if getattr(args, "registry", None):
        return load_registry(args.registry)
    return load_seed_registry()


def _read_source(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _cmd_parse(args) -> int:
    source = _read_source(args.file)
    try:
        program = parse(source)
    except AptlyError as err:
        _print_diagnostics(err, args.file)
        return EXIT_USER
    registry = _load_registry(args)
    diags = validate(program, registry)
    if diags:
        _print_diagnostics(AptlyError(diags), args.file)
        return EXIT_USER
    print(
        f"{len(program.components)} components, {len(program.globals)} globals, "
        f"{len(program.procedures)} procedures, {len(program.handlers)} handlers"
    )
    return EXIT_OK


def _cmd_compile(args) -> int:
    source = _read_source(args.file)
    registry = _load_registry(args)
    try:
        program = parse(source)
        block_program = blockmod.compile_program(program, registry)
    except AptlyError as err:
        _print_diagnostics(err, args.file)
        return EXIT_USER
    document = blockmod.blocks_to_json(block_program)
    if args.output:
        Path(args.output).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return EXIT_OK


def _cmd_decompile(args) -> int:
    registry = _load_registry(args)
    try:
        block_program = blockmod.blocks_from_json(_read_source(args.file))
        program = blockmod.decompile_program(block_program, registry)
    except AptlyError as err:
        _print_diagnostics(err, args.file)
        return EXIT_USER
    sys.stdout.write(canonical_print(program))
    return EXIT_OK


def _make_cli_backend(args):
    if args.backend == "mock-echo":
        return NearestEchoBackend()
    if args.backend == "scripted":
        if not args.responses:
            raise ConfigError.single(E_CONFIG, "--backend scripted needs --responses")
        return scripted_from_file(args.responses)
    from .backends import remote_from_env

    if not args.url or not args.key_env:
        raise ConfigError.single(E_CONFIG, "--backend remote needs --url and --key-env")
    return remote_from_env(args.url, args.key_env, timeout=args.timeout)


def _load_ready_corpus(args):
    corpus = corpus_load(args.corpus)
    return corpus_build(corpus, MockEmbedder(corpus.dimension))


def _cmd_gen(args) -> int:
    registry = _load_registry(args)
    try:
        backend = _make_cli_backend(args)
    except ConfigError as err:
        _print_diagnostics(err)
        return EXIT_CONFIG
    try:
        corpus = _load_ready_corpus(args)
        request = GenerationRequest(
            description=args.description, corpus=corpus, k=args.k, model=args.model
        )
        result = generate(request, registry, backend)
    except BackendError as err:
        _print_diagnostics(err)
        return EXIT_BACKEND
    except GenerationError as err:
        _print_diagnostics(err)
        for i, raw in enumerate(err.raw_completions, start=1):
            print(f"--- raw completion {i} ---\n{raw}", file=sys.stderr)
        return EXIT_USER
    except AptlyError as err:
        _print_diagnostics(err)
        return EXIT_USER
    if args.show_prompt:
        print(result.prompt, file=sys.stderr)
    _write_out(result.code)
    return EXIT_OK


def _cmd_edit(args) -> int:
    registry = _load_registry(args)
    try:
        backend = _make_cli_backend(args)
    except ConfigError as err:
        _print_diagnostics(err)
        return EXIT_CONFIG
    try:
        corpus = _load_ready_corpus(args)
        request = EditRequest(
            current_code=_read_source(args.file),
            instruction=args.instruction,
            corpus=corpus,
            k=args.k,
            model=args.model,
        )
        result = edit(request, registry, backend)
    except BackendError as err:
        _print_diagnostics(err)
        return EXIT_BACKEND
    except GenerationError as err:
        _print_diagnostics(err)
        return EXIT_USER
    except AptlyError as err:
        _print_diagnostics(err)
        return EXIT_USER
    if args.show_prompt:
        print(result.prompt, file=sys.stderr)
    _write_out(result.code)
    return EXIT_OK


def _cmd_corpus_build(args) -> int:
    try:
        corpus = corpus_load(args.path, default_dimension=args.dim)
        built = corpus_build(corpus, MockEmbedder(args.dim))
        corpus_save(built, args.path)
    except AptlyError as err:
        _print_diagnostics(err, args.path)
        return EXIT_USER
    print(f"embedded {len(built.pairs)} pairs at dimension {args.dim}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        config = load_config(args.config)
        backend = make_backend(config)
    except (ConfigError, BackendError) as err:
        _print_diagnostics(err)
        return EXIT_CONFIG
    import uvicorn

    from .service import create_app

    app = create_app(config, backend=backend)
    uvicorn.run(app, host="127.0.0.1", port=config.port)
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="aptly", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    def add_registry(p):
        p.add_argument("--registry", help="registry file (default: bundled seed)")

    p = sub.add_parser("parse", help="parse and validate a program")
    p.add_argument("file")
    add_registry(p)
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("compile", help="transpile a program to a block document")
    p.add_argument("file")
    p.add_argument("-o", "--output", help="write the document here instead of stdout")
    add_registry(p)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("decompile", help="turn a block document back into code")
    p.add_argument("file")
    add_registry(p)
    p.set_defaults(func=_cmd_decompile)

    def add_gen_options(p):
        p.add_argument("--corpus", default=str(_SAMPLES / "corpus.jsonl"))
        p.add_argument("--k", type=int, default=3)
        p.add_argument("--model", default="default")
        p.add_argument(
            "--backend", choices=("mock-echo", "scripted", "remote"), default="mock-echo"
        )
        p.add_argument("--responses", help="JSON response queue for --backend scripted")
        p.add_argument("--url", help="endpoint for --backend remote")
        p.add_argument("--key-env", help="env variable holding the API key")
        p.add_argument("--timeout", type=float, default=60.0)
        p.add_argument("--show-prompt", action="store_true")
        add_registry(p)

    p = sub.add_parser("gen", help="generate a program from a description")
    p.add_argument("description")
    add_gen_options(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("edit", help="revise a program per an instruction")
    p.add_argument("file")
    p.add_argument("instruction")
    add_gen_options(p)
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("corpus", help="corpus maintenance")
    corpus_sub = p.add_subparsers(dest="corpus_command", required=True)
    pb = corpus_sub.add_parser("build", help="embed all pairs in place")
    pb.add_argument("path")
    pb.add_argument("--dim", type=int, default=256)
    pb.set_defaults(func=_cmd_corpus_build)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_serve)

    return top


def run(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        _print_diagnostics(err)
        return EXIT_CONFIG
    except BackendError as err:
        _print_diagnostics(err)
        return EXIT_BACKEND
    except AptlyError as err:
        _print_diagnostics(err)
        return EXIT_USER
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER


def main() -> None:
    sys.exit(run())
