"""Spans, machine-readable diagnostic codes, and the error hierarchy.

Every failure surfaced to a user carries a list of Diagnostic values with a
stable ``code`` drawn from the closed set below, so CLI and HTTP clients can
branch on codes instead of scraping messages.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based line/column position plus a character length."""

    line: int = 1
    column: int = 1
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")


DEFAULT_SPAN = SourceSpan(1, 1, 0)

# Lexer
E_TAB_INDENT = "E_TAB_INDENT"
E_UNTERMINATED_STRING = "E_UNTERMINATED_STRING"
E_BAD_CHAR = "E_BAD_CHAR"

# Parser
E_SYNTAX = "E_SYNTAX"
E_EMPTY_PROGRAM = "E_EMPTY_PROGRAM"
E_DUP_NAME = "E_DUP_NAME"
E_UNDECLARED_PARENT = "E_UNDECLARED_PARENT"
E_RETURN_POSITION = "E_RETURN_POSITION"

# Registry loading
E_REGISTRY_PARSE = "E_REGISTRY_PARSE"
E_REGISTRY_MISSING_SCREEN = "E_REGISTRY_MISSING_SCREEN"

# Semantic validation
E_UNKNOWN_COMPONENT_TYPE = "E_UNKNOWN_COMPONENT_TYPE"
E_UNKNOWN_PROPERTY = "E_UNKNOWN_PROPERTY"
E_PROPERTY_TYPE = "E_PROPERTY_TYPE"
E_UNKNOWN_EVENT = "E_UNKNOWN_EVENT"
E_EVENT_ARITY = "E_EVENT_ARITY"
E_UNKNOWN_BUILTIN = "E_UNKNOWN_BUILTIN"
E_ARITY = "E_ARITY"
E_UNRESOLVED_NAME = "E_UNRESOLVED_NAME"
E_NOT_CONTAINER = "E_NOT_CONTAINER"

# Block programs
E_NOT_VALIDATED = "E_NOT_VALIDATED"
E_UNKNOWN_OPCODE = "E_UNKNOWN_OPCODE"
E_MALFORMED_BLOCK = "E_MALFORMED_BLOCK"
E_ORPHAN_INSTANCE = "E_ORPHAN_INSTANCE"
E_BLOCKS_JSON_PARSE = "E_BLOCKS_JSON_PARSE"
E_BLOCKS_JSON_VERSION = "E_BLOCKS_JSON_VERSION"

# Retrieval
E_DIM_MISMATCH = "E_DIM_MISMATCH"
E_MISSING_EMBEDDING = "E_MISSING_EMBEDDING"
E_CORPUS_PARSE = "E_CORPUS_PARSE"
E_CORPUS_DUP_ID = "E_CORPUS_DUP_ID"
E_CORPUS_CODE_INVALID = "E_CORPUS_CODE_INVALID"

# Generation pipeline
E_BACKEND = "E_BACKEND"
E_UNPARSEABLE_OUTPUT = "E_UNPARSEABLE_OUTPUT"
E_CURRENT_CODE_INVALID = "E_CURRENT_CODE_INVALID"
E_BAD_REQUEST = "E_BAD_REQUEST"

# Service / CLI configuration
E_CONFIG = "E_CONFIG"

ALL_CODES = frozenset(
    v for k, v in dict(globals()).items() if k.startswith("E_") and isinstance(v, str)
)

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan = DEFAULT_SPAN
    severity: str = SEVERITY_ERROR

    def __post_init__(self) -> None:
        if self.code not in ALL_CODES:
            raise ValueError(f"unknown diagnostic code {self.code!r}")
        if self.severity not in (SEVERITY_ERROR, SEVERITY_WARNING):
            raise ValueError(f"unknown severity {self.severity!r}")

    def render(self) -> str:
        return (
            f"{self.span.line}:{self.span.column}: {self.severity}: "
            f"{self.code}: {self.message}"
        )


def sort_diagnostics(diags: list[Diagnostic]) -> list[Diagnostic]:
    """Stable total order: span first, then code and message."""
    return sorted(diags, key=lambda d: (d.span.line, d.span.column, d.code, d.message))


class AptlyError(Exception):
    """Base class for all toolchain failures. Carries diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic], message: str | None = None):
        self.diagnostics = list(diagnostics)
        if message is None:
            message = self.diagnostics[0].message if self.diagnostics else "error"
        super().__init__(message)

    @classmethod
    def single(cls, code: str, message: str, span: SourceSpan = DEFAULT_SPAN) -> "AptlyError":
        return cls([Diagnostic(code, message, span)])


class ParseError(AptlyError):
    """Lexical or syntactic failure; the source never became a Program."""


class ValidationFailure(AptlyError):
    """A Program failed semantic validation where validity was required."""


class RegistryError(AptlyError):
    """The registry file could not be loaded."""


class DecompileError(AptlyError):
    """A block program could not be turned back into a Program."""


class BlocksJsonError(AptlyError):
    """A block-program document failed to deserialize."""


class RetrievalError(AptlyError):
    """Dimension mismatch or missing embeddings during similarity search."""


class CorpusError(AptlyError):
    """The example-pair corpus file is unusable."""


class BackendError(AptlyError):
    """The completion backend failed at the transport level."""


class RequestError(AptlyError):
    """A generation/edit request was rejected before reaching the backend."""


class GenerationError(AptlyError):
    """All generation attempts produced unusable code."""

    def __init__(
        self,
        diagnostics: list[Diagnostic],
        raw_completions: list[str],
        attempts: int,
        message: str | None = None,
    ):
        super().__init__(diagnostics, message)
        self.raw_completions = list(raw_completions)
        self.attempts = attempts


class ConfigError(AptlyError):
    """Service or CLI configuration is unusable."""
