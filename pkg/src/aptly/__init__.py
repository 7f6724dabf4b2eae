"""Aptly language toolchain.

Parse Aptly source, validate it against a component registry, transpile it
to and from block programs, and generate code from natural-language
descriptions through retrieval-augmented few-shot prompting.
"""

from .astnodes import Program, program_invariant_errors, structural_equal
from .blocks import (
    Block,
    BlockProgram,
    ComponentNode,
    blocks_from_json,
    blocks_to_json,
    compile_program,
    decompile_program,
)
from .diagnostics import AptlyError, Diagnostic, ParseError, SourceSpan
from .genpipe import (
    EditRequest,
    GenerationRequest,
    GenerationResult,
    edit,
    extract_code,
    generate,
    synthesize_edit_prompt,
    synthesize_prompt,
)
from .parser import parse
from .printer import canonical_print
from .registry import Registry, load_registry, load_seed_registry, validate
from .retrieval import (
    Corpus,
    ExamplePair,
    MockEmbedder,
    corpus_build,
    corpus_load,
    corpus_save,
    cosine_distance,
    mock_embed,
    top_k,
)

__version__ = "0.1.0"

__all__ = [
    "AptlyError",
    "Block",
    "BlockProgram",
    "ComponentNode",
    "Corpus",
    "Diagnostic",
    "EditRequest",
    "ExamplePair",
    "GenerationRequest",
    "GenerationResult",
    "MockEmbedder",
    "ParseError",
    "Program",
    "Registry",
    "SourceSpan",
    "blocks_from_json",
    "blocks_to_json",
    "canonical_print",
    "compile_program",
    "corpus_build",
    "corpus_load",
    "corpus_save",
    "cosine_distance",
    "decompile_program",
    "edit",
    "extract_code",
    "generate",
    "load_registry",
    "load_seed_registry",
    "mock_embed",
    "parse",
    "program_invariant_errors",
    "structural_equal",
    "synthesize_edit_prompt",
    "synthesize_prompt",
    "top_k",
    "validate",
]
