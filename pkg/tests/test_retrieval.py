import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from aptly.diagnostics import CorpusError, RetrievalError
from aptly.retrieval import (
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


# -- independent oracles ---------------------------------------------------


def fnv1a64_oracle(data: bytes) -> int:
    """Textbook FNV-1a, written separately from the implementation."""
    h = 14695981039346656037
    for byte in data:
        h = ((h ^ byte) * 1099511628211) % (1 << 64)
    return h


def cosine_oracle(u, v) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0 or nv == 0:
        return 1.0
    return 1.0 - dot / (nu * nv)


def top_k_oracle(query, corpus, k, embedder):
    """Brute force: full sort of all pairs by (distance, id)."""
    q = embedder.embed(query)
    scored = [(cosine_oracle(q, p.embedding), p.id, p) for p in corpus.pairs]
    scored.sort(key=lambda t: (t[0], t[1]))
    return [p for _, _, p in scored[:k]]


# -- mock_embed ------------------------------------------------------------


def test_empty_text_embeds_to_zero_vector():
    vec = mock_embed("", 256)
    assert len(vec) == 256
    assert all(x == 0.0 for x in vec)


def test_repeated_token_lands_on_fnv_index():
    vec = mock_embed("button button", 256)
    expected_index = fnv1a64_oracle(b"button") % 256
    nonzero = [i for i, x in enumerate(vec) if x != 0.0]
    assert nonzero == [expected_index]
    assert vec[expected_index] == 1.0  # count 2 normalizes to 1.0


def test_tokenization_lowercases_and_splits_on_non_alphanumerics():
    assert mock_embed("Button! BUTTON?", 64) == mock_embed("button button", 64)
    assert mock_embed("a_b", 64) == mock_embed("a b", 64)


def test_embedding_is_deterministic():
    a = mock_embed("an app that draws with three buttons", 256)
    b = mock_embed("an app that draws with three buttons", 256)
    assert a == b


@given(st.text(max_size=60), st.integers(min_value=1, max_value=64))
@settings(max_examples=150)
def test_embeddings_are_unit_norm_or_zero(text, dim):
    vec = mock_embed(text, dim)
    assert len(vec) == dim
    norm = math.sqrt(sum(x * x for x in vec))
    assert norm == 0.0 or abs(norm - 1.0) < 1e-9


# -- cosine distance ---------------------------------------------------------


def test_identical_vectors_distance_zero():
    vec = mock_embed("planet weight calculator", 128)
    assert abs(cosine_distance(vec, vec)) <= 1e-12


def test_orthogonal_unit_vectors():
    u = (1.0, 0.0)
    v = (0.0, 1.0)
    assert cosine_distance(u, v) == 1.0


def test_opposite_vectors():
    assert abs(cosine_distance((1.0, 0.0), (-1.0, 0.0)) - 2.0) <= 1e-12


def test_zero_vector_is_maximal_indifference():
    assert cosine_distance((0.0, 0.0), (1.0, 2.0)) == 1.0
    assert cosine_distance((1.0, 2.0), (0.0, 0.0)) == 1.0


def test_dimension_mismatch():
    with pytest.raises(RetrievalError) as err:
        cosine_distance((1.0,), (1.0, 2.0))
    assert err.value.diagnostics[0].code == "E_DIM_MISMATCH"


def test_cosine_agrees_with_naive_oracle():
    rng = random.Random(42)
    for _ in range(1000):
        dim = rng.randint(1, 16)
        u = tuple(rng.uniform(-5, 5) for _ in range(dim))
        v = tuple(rng.uniform(-5, 5) for _ in range(dim))
        assert abs(cosine_distance(u, v) - cosine_oracle(u, v)) <= 1e-9


def test_cosine_symmetry():
    rng = random.Random(1)
    for _ in range(200):
        u = tuple(rng.uniform(-1, 1) for _ in range(8))
        v = tuple(rng.uniform(-1, 1) for _ in range(8))
        assert abs(cosine_distance(u, v) - cosine_distance(v, u)) <= 1e-12


def test_cosine_scale_invariance():
    rng = random.Random(2)
    for _ in range(200):
        u = tuple(rng.uniform(-1, 1) for _ in range(8))
        v = tuple(rng.uniform(-1, 1) for _ in range(8))
        c = rng.uniform(0.001, 1000)
        scaled = tuple(c * x for x in u)
        assert abs(cosine_distance(scaled, v) - cosine_distance(u, v)) <= 1e-9


def test_distance_in_range():
    rng = random.Random(3)
    for _ in range(500):
        u = tuple(rng.uniform(-10, 10) for _ in range(4))
        v = tuple(rng.uniform(-10, 10) for _ in range(4))
        d = cosine_distance(u, v)
        assert 0.0 <= d <= 2.0


# -- top_k --------------------------------------------------------------------


def synthetic_corpus(n: int, dim: int = 64, seed: int = 5) -> Corpus:
    rng = random.Random(seed)
    words = ["button", "canvas", "label", "sound", "timer", "list", "draw", "speak"]
    pairs = []
    for i in range(n):
        description = " ".join(rng.choice(words) for _ in range(rng.randint(1, 6)))
        pairs.append(
            ExamplePair(
                id=f"pair-{i:03d}",
                description=description,
                code="Screen1 = Screen()\n",
                embedding=mock_embed(description, dim),
            )
        )
    return Corpus(pairs=tuple(pairs), dimension=dim)


def test_top_k_zero_returns_empty():
    corpus = synthetic_corpus(10)
    assert top_k("draw", corpus, 0, MockEmbedder(64)) == []


def test_top_k_singleton():
    corpus = synthetic_corpus(1)
    result = top_k("anything at all", corpus, 3, MockEmbedder(64))
    assert [p.id for p in result] == ["pair-000"]


def test_top_k_matches_brute_force_oracle():
    corpus = synthetic_corpus(200)
    embedder = MockEmbedder(64)
    for k in (1, 3, 10, 200, 500):
        expected = top_k_oracle("draw a button", corpus, k, embedder)
        actual = top_k("draw a button", corpus, k, embedder)
        assert [p.id for p in actual] == [p.id for p in expected]


def test_top_k_breaks_ties_by_id():
    # Identical descriptions embed identically: distance ties resolved by id.
    pairs = tuple(
        ExamplePair(
            id=f"tie-{i}",
            description="same words",
            code="Screen1 = Screen()\n",
            embedding=mock_embed("same words", 32),
        )
        for i in (3, 1, 2)
    )
    corpus = Corpus(pairs=pairs, dimension=32)
    result = top_k("same words", corpus, 3, MockEmbedder(32))
    assert [p.id for p in result] == ["tie-1", "tie-2", "tie-3"]


def test_top_k_requires_embeddings():
    corpus = Corpus(
        pairs=(
            ExamplePair(id="x", description="d", code="Screen1 = Screen()\n"),
        ),
        dimension=32,
    )
    with pytest.raises(RetrievalError) as err:
        top_k("d", corpus, 1, MockEmbedder(32))
    assert err.value.diagnostics[0].code == "E_MISSING_EMBEDDING"


def test_top_k_embedder_dimension_must_match():
    corpus = synthetic_corpus(3, dim=64)
    with pytest.raises(RetrievalError) as err:
        top_k("d", corpus, 1, MockEmbedder(32))
    assert err.value.diagnostics[0].code == "E_DIM_MISMATCH"


# -- corpus persistence --------------------------------------------------------


def make_pairs():
    return (
        ExamplePair(
            id="planets",
            description="weight on other planets",
            code="Screen1 = Screen()\n",
            embedding=mock_embed("weight on other planets", 16),
        ),
        ExamplePair(
            id="speak",
            description="says text aloud ☕",
            code='Screen1 = Screen()\nL = Label(Screen1, Text = "hi")\n',
        ),
    )


def test_corpus_save_load_roundtrip(tmp_path):
    path = tmp_path / "corpus.jsonl"
    corpus = Corpus(pairs=make_pairs(), dimension=16)
    corpus_save(corpus, path)
    loaded = corpus_load(path, default_dimension=16)
    assert loaded == corpus
    # Embeddings survive bitwise.
    assert loaded.pairs[0].embedding == corpus.pairs[0].embedding


def test_corpus_double_save_is_byte_stable(tmp_path):
    path_a = tmp_path / "a.jsonl"
    path_b = tmp_path / "b.jsonl"
    corpus = Corpus(pairs=make_pairs(), dimension=16)
    corpus_save(corpus, path_a)
    corpus_save(corpus_load(path_a, default_dimension=16), path_b)
    assert path_a.read_bytes() == path_b.read_bytes()


def test_corpus_duplicate_id(tmp_path):
    path = tmp_path / "corpus.jsonl"
    line = '{"id": "a", "description": "d", "code": "Screen1 = Screen()\\n"}'
    path.write_text(line + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(CorpusError) as err:
        corpus_load(path)
    assert err.value.diagnostics[0].code == "E_CORPUS_DUP_ID"


def test_corpus_invalid_code(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        '{"id": "a", "description": "d", "code": "Widget1 = Widget()\\n"}\n',
        encoding="utf-8",
    )
    with pytest.raises(CorpusError) as err:
        corpus_load(path)
    assert err.value.diagnostics[0].code == "E_CORPUS_CODE_INVALID"


def test_corpus_code_must_validate_against_registry(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        '{"id": "a", "description": "d", "code": "Screen1 = Screen()\\nF = Widget(Screen1)\\n"}\n',
        encoding="utf-8",
    )
    with pytest.raises(CorpusError) as err:
        corpus_load(path)
    assert err.value.diagnostics[0].code == "E_CORPUS_CODE_INVALID"


def test_corpus_bad_json(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("{oops\n", encoding="utf-8")
    with pytest.raises(CorpusError) as err:
        corpus_load(path)
    assert err.value.diagnostics[0].code == "E_CORPUS_PARSE"


def test_corpus_unknown_field(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        '{"id": "a", "description": "d", "code": "Screen1 = Screen()\\n", "note": 1}\n',
        encoding="utf-8",
    )
    with pytest.raises(CorpusError) as err:
        corpus_load(path)
    assert err.value.diagnostics[0].code == "E_CORPUS_PARSE"


def test_corpus_build_fills_missing_embeddings():
    pairs = tuple(
        ExamplePair(id=f"p{i}", description=f"app number {i}", code="Screen1 = Screen()\n")
        for i in range(10)
    )
    corpus = Corpus(pairs=pairs, dimension=256)
    built = corpus_build(corpus, MockEmbedder(256))
    for pair in built.pairs:
        assert pair.embedding is not None
        assert len(pair.embedding) == 256
        norm = math.sqrt(sum(x * x for x in pair.embedding))
        assert norm == 0.0 or abs(norm - 1.0) < 1e-9


def test_corpus_build_preserves_matching_embeddings():
    sentinel = tuple([1.0] + [0.0] * 15)
    pairs = (
        ExamplePair(id="keep", description="already embedded", code="x", embedding=sentinel),
        ExamplePair(id="fill", description="needs embedding", code="x"),
    )
    built = corpus_build(Corpus(pairs=pairs, dimension=16), MockEmbedder(16))
    assert built.pairs[0].embedding == sentinel
    assert built.pairs[1].embedding == mock_embed("needs embedding", 16)


def test_corpus_build_reembeds_wrong_dimension():
    pairs = (
        ExamplePair(id="a", description="short one", code="x", embedding=(1.0, 0.0)),
    )
    built = corpus_build(Corpus(pairs=pairs, dimension=2), MockEmbedder(8))
    assert built.dimension == 8
    assert len(built.pairs[0].embedding) == 8
