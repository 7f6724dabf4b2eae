"""Example-pair corpus, deterministic mock embedder, and cosine top-k.

The embedder is a hashed bag-of-words: tokens are lowercased alphanumeric
runs, each hashed with 64-bit FNV-1a into one of ``dimension`` buckets, and
the count vector is L2-normalized. It is a stand-in for a hosted embedding
model with the one property the pipeline needs: identical text always maps
to the identical vector, on every platform.

Corpus files are UTF-8 JSON lines, one example pair per line with fields
``id``, ``description``, ``code`` and optional ``embedding``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .diagnostics import (
    CorpusError,
    Diagnostic,
    E_CORPUS_CODE_INVALID,
    E_CORPUS_DUP_ID,
    E_CORPUS_PARSE,
    E_DIM_MISMATCH,
    E_MISSING_EMBEDDING,
    RetrievalError,
)

Vector = tuple

DEFAULT_DIMENSION = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Maximal alphanumeric runs (underscore is a separator).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mock_embed(text: str, dimension: int = DEFAULT_DIMENSION) -> Vector:
    """Deterministic hashed bag-of-words embedding, L2-normalized."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    counts = [0.0] * dimension
    for token in _TOKEN_RE.findall(text.lower()):
        counts[fnv1a64(token.encode("utf-8")) % dimension] += 1.0
    norm = math.sqrt(sum(c * c for c in counts))
    if norm == 0.0:
        return tuple(counts)
    return tuple(c / norm for c in counts)


@dataclass(frozen=True)
class MockEmbedder:
    dimension: int = DEFAULT_DIMENSION

    def embed(self, text: str) -> Vector:
        return mock_embed(text, self.dimension)


def cosine_distance(u: Vector, v: Vector) -> float:
    """1 - cos(angle); zero vectors compare at maximal indifference 1.0."""
    if len(u) != len(v):
        raise RetrievalError(
            [
                Diagnostic(
                    E_DIM_MISMATCH,
                    f"vector dimensions differ: {len(u)} vs {len(v)}",
                )
            ]
        )
    dot = 0.0
    nu = 0.0
    nv = 0.0
    for a, b in zip(u, v):
        dot += a * b
        nu += a * a
        nv += b * b
    if nu == 0.0 or nv == 0.0:
        return 1.0
    distance = 1.0 - dot / (math.sqrt(nu) * math.sqrt(nv))
    return min(2.0, max(0.0, distance))


@dataclass(frozen=True)
class ExamplePair:
    id: str
    description: str
    code: str
    embedding: Optional[Vector] = None

    def __post_init__(self) -> None:
        if self.embedding is not None:
            embedding = tuple(float(x) for x in self.embedding)
            if any(math.isnan(x) or math.isinf(x) for x in embedding):
                raise ValueError(f"pair {self.id!r} has a non-finite embedding")
            object.__setattr__(self, "embedding", embedding)


@dataclass(frozen=True)
class Corpus:
    pairs: tuple = ()
    dimension: int = DEFAULT_DIMENSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.dimension < 1:
            raise ValueError("corpus dimension must be positive")
        ids = [p.id for p in self.pairs]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate pair ids in corpus")
        for pair in self.pairs:
            if pair.embedding is not None and len(pair.embedding) != self.dimension:
                raise ValueError(
                    f"pair {pair.id!r} embedding has dimension "
                    f"{len(pair.embedding)}, corpus is {self.dimension}"
                )

    def get(self, pair_id: str) -> Optional[ExamplePair]:
        for pair in self.pairs:
            if pair.id == pair_id:
                return pair
        return None


def top_k(query: str, corpus: Corpus, k: int, embedder) -> list:
    """The k nearest pairs by cosine distance, ties broken by id.

    Every corpus pair must already be embedded and the embedder dimension
    must equal the corpus dimension.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if embedder.dimension != corpus.dimension:
        raise RetrievalError(
            [
                Diagnostic(
                    E_DIM_MISMATCH,
                    f"embedder dimension {embedder.dimension} != corpus "
                    f"dimension {corpus.dimension}",
                )
            ]
        )
    missing = [p.id for p in corpus.pairs if p.embedding is None]
    if missing:
        raise RetrievalError(
            [
                Diagnostic(
                    E_MISSING_EMBEDDING,
                    f"pairs without embeddings: {', '.join(missing)}",
                )
            ]
        )
    query_vec = embedder.embed(query)
    ranked = sorted(
        corpus.pairs,
        key=lambda p: (cosine_distance(query_vec, p.embedding), p.id),
    )
    return list(ranked[: min(k, len(ranked))])


def corpus_build(corpus: Corpus, embedder) -> Corpus:
    """Fill in missing embeddings; re-embed pairs of mismatched dimension."""
    pairs = []
    for pair in corpus.pairs:
        if pair.embedding is not None and len(pair.embedding) == embedder.dimension:
            pairs.append(pair)
        else:
            pairs.append(
                ExamplePair(
                    id=pair.id,
                    description=pair.description,
                    code=pair.code,
                    embedding=embedder.embed(pair.description),
                )
            )
    return Corpus(pairs=tuple(pairs), dimension=embedder.dimension)


def _corpus_fail(code: str, message: str):
    raise CorpusError([Diagnostic(code, message)])


def corpus_load(
    path,
    registry=None,
    default_dimension: int = DEFAULT_DIMENSION,
    validate_code: bool = True,
) -> Corpus:
    """Load a JSONL corpus file; every pair's code must parse and validate.

    ``registry`` defaults to the bundled seed registry. Set
    ``validate_code=False`` to skip code checks (used by tooling that wants
    to inspect a broken corpus).
    """
    from .parser import parse
    from .registry import load_seed_registry, validate as validate_program
    from .diagnostics import AptlyError

    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _corpus_fail(E_CORPUS_PARSE, f"cannot read corpus file: {exc}")

    if validate_code and registry is None:
        registry = load_seed_registry()

    pairs: list[ExamplePair] = []
    seen: set[str] = set()
    for lineno, line in enumerate(raw.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            _corpus_fail(E_CORPUS_PARSE, f"line {lineno}: not valid JSON: {exc}")
        if not isinstance(doc, dict):
            _corpus_fail(E_CORPUS_PARSE, f"line {lineno}: record must be an object")
        unknown = set(doc) - {"id", "description", "code", "embedding"}
        if unknown:
            _corpus_fail(E_CORPUS_PARSE, f"line {lineno}: unknown keys {sorted(unknown)}")
        for key in ("id", "description", "code"):
            if not isinstance(doc.get(key), str):
                _corpus_fail(E_CORPUS_PARSE, f"line {lineno}: {key!r} must be a string")
        if doc["id"] in seen:
            _corpus_fail(E_CORPUS_DUP_ID, f"line {lineno}: duplicate id {doc['id']!r}")
        seen.add(doc["id"])
        embedding = None
        if "embedding" in doc:
            values = doc["embedding"]
            if not isinstance(values, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in values
            ):
                _corpus_fail(E_CORPUS_PARSE, f"line {lineno}: 'embedding' must be a float array")
            embedding = tuple(float(x) for x in values)
        if validate_code:
            try:
                program = parse(doc["code"])
            except AptlyError as exc:
                _corpus_fail(
                    E_CORPUS_CODE_INVALID,
                    f"pair {doc['id']!r}: code does not parse: {exc}",
                )
            diags = validate_program(program, registry)
            if diags:
                _corpus_fail(
                    E_CORPUS_CODE_INVALID,
                    f"pair {doc['id']!r}: code does not validate: {diags[0].message}",
                )
        try:
            pairs.append(
                ExamplePair(
                    id=doc["id"],
                    description=doc["description"],
                    code=doc["code"],
                    embedding=embedding,
                )
            )
        except ValueError as exc:
            _corpus_fail(E_CORPUS_PARSE, f"line {lineno}: {exc}")

    dims = {len(p.embedding) for p in pairs if p.embedding is not None}
    if len(dims) > 1:
        _corpus_fail(E_CORPUS_PARSE, f"mixed embedding dimensions: {sorted(dims)}")
    dimension = dims.pop() if dims else default_dimension
    try:
        return Corpus(pairs=tuple(pairs), dimension=dimension)
    except ValueError as exc:
        _corpus_fail(E_CORPUS_PARSE, str(exc))
    raise AssertionError("unreachable")


def corpus_save(corpus: Corpus, path) -> None:
    """Write JSONL; a save/load/save cycle is byte-stable."""
    lines = []
    for pair in corpus.pairs:
        doc: dict = {"id": pair.id, "description": pair.description, "code": pair.code}
        if pair.embedding is not None:
            doc["embedding"] = list(pair.embedding)
        lines.append(json.dumps(doc, sort_keys=True, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
