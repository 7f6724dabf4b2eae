"""Few-shot prompt synthesis and the generate/edit pipelines.

The pipeline is retrieve -> synthesize prompt -> complete -> extract ->
parse + validate. When the model's output fails to parse or validate, the
diagnostics are appended to the prompt as an error section and the backend
is asked again, up to MAX_ATTEMPTS total tries. A successful result is
always machine-checked code; failure keeps the raw completions so the user
can rescue something by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .diagnostics import (
    AptlyError,
    Diagnostic,
    E_BAD_REQUEST,
    E_CURRENT_CODE_INVALID,
    E_UNPARSEABLE_OUTPUT,
    GenerationError,
    ParseError,
    RequestError,
)
from .parser import parse
from .registry import Registry, validate
from .retrieval import Corpus, ExamplePair, MockEmbedder, top_k

PROMPT_HEADER = "Write the Aptly program for each app description."
EDIT_HEADER = "Apply the requested edit to the Aptly program."
STOP_MARKER = "### Description:"

# One initial attempt plus two repairs.
MAX_ATTEMPTS = 3

DEFAULT_K = 3
DEFAULT_MODEL = "default"
DEFAULT_TEMPERATURE = 0.2
DEFAULT_MAX_TOKENS = 1024


@dataclass(frozen=True)
class GenerationRequest:
    description: str
    corpus: Corpus
    k: int = DEFAULT_K
    model: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise RequestError(
                [Diagnostic(E_BAD_REQUEST, "description must not be empty")]
            )
        if self.k < 0:
            raise RequestError([Diagnostic(E_BAD_REQUEST, "k must be non-negative")])
        if self.temperature < 0:
            raise RequestError(
                [Diagnostic(E_BAD_REQUEST, "temperature must be non-negative")]
            )
        if self.max_tokens < 1:
            raise RequestError([Diagnostic(E_BAD_REQUEST, "max_tokens must be positive")])


@dataclass(frozen=True)
class EditRequest:
    current_code: str
    instruction: str
    corpus: Corpus
    k: int = DEFAULT_K
    model: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise RequestError(
                [Diagnostic(E_BAD_REQUEST, "edit instruction must not be empty")]
            )
        if self.k < 0:
            raise RequestError([Diagnostic(E_BAD_REQUEST, "k must be non-negative")])
        if self.temperature < 0:
            raise RequestError(
                [Diagnostic(E_BAD_REQUEST, "temperature must be non-negative")]
            )
        if self.max_tokens < 1:
            raise RequestError([Diagnostic(E_BAD_REQUEST, "max_tokens must be positive")])


@dataclass(frozen=True)
class GenerationResult:
    code: str
    examples_used: tuple
    prompt: str
    raw_completions: tuple
    attempts: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "examples_used", tuple(self.examples_used))
        object.__setattr__(self, "raw_completions", tuple(self.raw_completions))
        if self.attempts != len(self.raw_completions):
            raise ValueError("attempts must equal the number of raw completions")


def _example_section(pair: ExamplePair) -> str:
    return (
        f"### Description:\n{pair.description.strip()}\n"
        f"### Aptly:\n{pair.code.rstrip()}\n\n"
    )


def synthesize_prompt(description: str, examples: Sequence[ExamplePair]) -> str:
    """Few-shot prompt; examples arrive most-similar-first and are reversed
    so the most similar pair sits last, nearest the query."""
    parts = [PROMPT_HEADER, "\n\n"]
    for pair in reversed(list(examples)):
        parts.append(_example_section(pair))
    parts.append(f"### Description:\n{description.strip()}\n### Aptly:\n")
    return "".join(parts)


def synthesize_edit_prompt(
    current_code: str, instruction: str, examples: Sequence[ExamplePair]
) -> str:
    """Edit prompt: example sections, then the current program and the edit."""
    try:
        parse(current_code)
    except ParseError as exc:
        raise RequestError(
            [Diagnostic(E_CURRENT_CODE_INVALID, "current code does not parse")]
            + exc.diagnostics
        ) from exc
    parts = [EDIT_HEADER, "\n\n"]
    for pair in reversed(list(examples)):
        parts.append(_example_section(pair))
    parts.append(
        f"### Current Aptly:\n{current_code.rstrip()}\n"
        f"### Edit:\n{instruction.strip()}\n### Aptly:\n"
    )
    return "".join(parts)


def extract_code(raw: str) -> str:
    """Backend output hygiene: trim, strip one code fence, stop at runaway."""
    text = raw.strip()
    if text.startswith("```"):
        first_newline = text.find("\n")
        if first_newline != -1 and text.endswith("```"):
            text = text[first_newline + 1 : -3].strip()
    cut = text.find(STOP_MARKER)
    if cut != -1:
        text = text[:cut]
    return text.strip()


def _check_code(code: str, registry: Registry) -> list[Diagnostic]:
    try:
        program = parse(code)
    except AptlyError as exc:
        return exc.diagnostics
    return validate(program, registry)


def _diagnostic_lines(diags: Sequence[Diagnostic]) -> str:
    return "\n".join(
        f"{d.code}: {d.message} (line {d.span.line}, column {d.span.column})"
        for d in diags
    )


def _run_pipeline(
    prompt: str,
    examples: Sequence[ExamplePair],
    registry: Registry,
    backend,
    model: str,
    temperature: float,
    max_tokens: int,
) -> GenerationResult:
    raw_completions: list[str] = []
    last_diags: list[Diagnostic] = []
    for attempt in range(1, MAX_ATTEMPTS + 1):
        raw = backend.complete(
            prompt,
            model=model,
            temperature=temperature,
            max_tokens=max_tokens,
            stop=[STOP_MARKER],
        )
        raw_completions.append(raw)
        code = extract_code(raw)
        diags = _check_code(code, registry)
        if not diags:
            return GenerationResult(
                code=code,
                examples_used=tuple(p.id for p in examples),
                prompt=prompt,
                raw_completions=tuple(raw_completions),
                attempts=attempt,
            )
        last_diags = diags
        prompt = (
            f"{prompt}{code.rstrip()}\n"
            f"### Errors:\n{_diagnostic_lines(diags)}\n"
            f"### Aptly:\n"
        )
    raise GenerationError(
        [
            Diagnostic(
                E_UNPARSEABLE_OUTPUT,
                f"backend output failed to parse or validate after "
                f"{MAX_ATTEMPTS} attempts",
            )
        ]
        + last_diags,
        raw_completions=raw_completions,
        attempts=MAX_ATTEMPTS,
    )


def _retrieve(corpus: Corpus, query: str, k: int, embedder) -> list:
    if embedder is None:
        embedder = MockEmbedder(corpus.dimension)
    return top_k(query, corpus, k, embedder)


def generate(
    request: GenerationRequest,
    registry: Registry,
    backend,
    embedder=None,
) -> GenerationResult:
    """Create a program from a description.

    Raises BackendError on transport failure and GenerationError when every
    attempt produced unusable code.
    """
    examples = _retrieve(request.corpus, request.description, request.k, embedder)
    prompt = synthesize_prompt(request.description, examples)
    return _run_pipeline(
        prompt,
        examples,
        registry,
        backend,
        request.model,
        request.temperature,
        request.max_tokens,
    )


def edit(
    request: EditRequest,
    registry: Registry,
    backend,
    embedder=None,
) -> GenerationResult:
    """Revise a program per an instruction; returns a full replacement."""
    diags = _check_code(request.current_code, registry)
    if diags:
        raise RequestError(
            [Diagnostic(E_CURRENT_CODE_INVALID, "current code does not parse or validate")]
            + diags
        )
    examples = _retrieve(request.corpus, request.instruction, request.k, embedder)
    prompt = synthesize_edit_prompt(request.current_code, request.instruction, examples)
    return _run_pipeline(
        prompt,
        examples,
        registry,
        backend,
        request.model,
        request.temperature,
        request.max_tokens,
    )
