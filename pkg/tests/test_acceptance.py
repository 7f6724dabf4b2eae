"""Acceptance gate: every criterion as one test at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion.
"""

import json
import random
import time

import pytest
from fastapi.testclient import TestClient

from aptly import astnodes as ast
from aptly import (
    canonical_print,
    compile_program,
    decompile_program,
    parse,
    structural_equal,
    validate,
)
from aptly.backends import ScriptedBackend
from aptly.cli import run
from aptly.diagnostics import ParseError
from aptly.genpipe import synthesize_edit_prompt, synthesize_prompt
from aptly.retrieval import (
    Corpus,
    ExamplePair,
    MockEmbedder,
    corpus_save,
    cosine_distance,
    mock_embed,
    top_k,
)
from aptly.service import create_app

from conftest import GOLDENS
from genprograms import generate_programs
from test_genpipe import PAIR_A, PAIR_B
from test_retrieval import cosine_oracle, synthetic_corpus, top_k_oracle


def _report(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def test_listing1_golden(listing1_source):
    started = time.perf_counter()
    program = parse(listing1_source)

    assert len(program.components) == 8
    assert len(program.globals) == 1
    gravities = program.globals[0].init
    assert isinstance(gravities, ast.DictLit)
    assert len(gravities.entries) == 7
    assert gravities.entries[0] == ("Mercury", ast.NumberLit(text="0.38"))
    assert dict(gravities.entries)["Neptune"] == ast.NumberLit(text="1.12")
    assert len(program.procedures) == 1
    proc = program.procedures[0]
    assert len(proc.params) == 2
    assert proc.has_result
    assert len(program.handlers) == 1
    handler = program.handlers[0]
    assert (handler.component, handler.event) == ("Calculate", "Click")

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    _report("Listing 1 golden")


def test_canonical_round_trip(listing1_source, registry):
    program = parse(listing1_source)
    printed = canonical_print(program)
    assert structural_equal(parse(printed), program)

    block_program = compile_program(program, registry)
    reprinted = canonical_print(decompile_program(block_program, registry))
    assert reprinted == printed  # exact, byte-identical
    _report("canonical round trip")


def test_property_suite(registry):
    started = time.perf_counter()
    programs = generate_programs(registry, 500, seed=2024)
    assert len(programs) >= 500
    failures = 0
    for program in programs:
        assert validate(program, registry) == []
        if parse(canonical_print(program)) != program:
            failures += 1
            continue
        block_program = compile_program(program, registry)
        if decompile_program(block_program, registry) != program:
            failures += 1
    elapsed = time.perf_counter() - started
    assert failures == 0
    assert elapsed < 60.0, f"took {elapsed:.1f}s"
    _report(f"property suite (500 programs, {elapsed:.1f}s)")


def test_retrieval_oracle():
    corpus = synthetic_corpus(200, dim=256, seed=99)
    embedder = MockEmbedder(256)
    for k in (1, 3, 10):
        expected = [p.id for p in top_k_oracle("draw buttons on a canvas", corpus, k, embedder)]
        actual = [p.id for p in top_k("draw buttons on a canvas", corpus, k, embedder)]
        assert actual == expected, f"k={k}"

    # Tie-break: duplicate descriptions, ids deliberately out of order.
    tied = Corpus(
        pairs=tuple(
            ExamplePair(
                id=f"tie-{i}",
                description="identical words",
                code="Screen1 = Screen()\n",
                embedding=mock_embed("identical words", 256),
            )
            for i in (2, 0, 1)
        ),
        dimension=256,
    )
    assert [p.id for p in top_k("identical words", tied, 3, embedder)] == [
        "tie-0", "tie-1", "tie-2",
    ]

    rng = random.Random(7)
    for _ in range(1000):
        dim = rng.randint(1, 12)
        u = tuple(rng.uniform(-4, 4) for _ in range(dim))
        v = tuple(rng.uniform(-4, 4) for _ in range(dim))
        assert abs(cosine_distance(u, v) - cosine_oracle(u, v)) <= 1e-9
        c = rng.uniform(0.01, 100)
        assert abs(cosine_distance(tuple(c * x for x in u), v) - cosine_distance(u, v)) <= 1e-9
    _report("retrieval oracle")


def test_prompt_goldens():
    two = synthesize_prompt("A plain empty app", [PAIR_A, PAIR_B])
    assert two == (GOLDENS / "prompt_two_examples.txt").read_text(encoding="utf-8")
    none = synthesize_prompt("A plain empty app", [])
    assert none == (GOLDENS / "prompt_no_examples.txt").read_text(encoding="utf-8")
    edited = synthesize_edit_prompt(PAIR_A.code, "Make the button bigger", [PAIR_B])
    assert edited == (GOLDENS / "edit_prompt.txt").read_text(encoding="utf-8")
    _report("prompt goldens")


def test_offline_end_to_end(tmp_path, capsys, listing1_canonical):
    corpus_path = tmp_path / "corpus.jsonl"
    corpus_save(
        Corpus(
            pairs=(
                ExamplePair(
                    id="planet-weight",
                    description="An app to calculate your weight on different planets",
                    code=listing1_canonical,
                ),
            ),
            dimension=256,
        ),
        corpus_path,
    )
    exit_code = run(
        [
            "gen",
            "An app to calculate your weight on different planets",
            "--corpus",
            str(corpus_path),
            "--backend",
            "mock-echo",
        ]
    )
    captured = capsys.readouterr()
    assert exit_code == 0
    assert captured.out == listing1_canonical  # byte-equal

    responses = tmp_path / "garbage.json"
    responses.write_text(json.dumps(["><(((*>", "456oops(", "nope["]), encoding="utf-8")
    exit_code = run(
        [
            "gen",
            "anything",
            "--corpus",
            str(corpus_path),
            "--backend",
            "scripted",
            "--responses",
            str(responses),
        ]
    )
    captured = capsys.readouterr()
    assert exit_code == 1
    assert "E_UNPARSEABLE_OUTPUT" in captured.err
    assert "raw completion 3" in captured.err
    # The conftest no_network fixture guarantees no network anywhere.
    _report("offline end to end")


def test_service_conformance(listing1_source, listing1_canonical):
    corpus = Corpus(
        pairs=(
            ExamplePair(
                id="planet-weight",
                description="An app to calculate your weight on different planets",
                code=listing1_canonical,
            ),
        ),
        dimension=256,
    )
    client = TestClient(create_app(corpus=corpus))

    compiled = client.post("/v1/compile", json={"code": listing1_source})
    assert compiled.status_code == 200
    workspace = compiled.json()["blocks"]["workspace"]
    # Census oracle: one top-level block per global, procedure and handler.
    program = parse(listing1_source)
    expected_top = len(program.globals) + len(program.procedures) + len(program.handlers)
    assert expected_top == 3
    assert len(workspace) == expected_top

    empty = client.post("/v1/generate", json={"description": ""})
    assert empty.status_code == 400

    garbage_client = TestClient(
        create_app(corpus=corpus, backend=ScriptedBackend(["(", "[", "{"]))
    )
    failed = garbage_client.post("/v1/generate", json={"description": "an app"})
    assert failed.status_code == 422
    body = failed.json()
    assert body["attempts"] == 3
    assert len(body["raw_completions"]) == 3
    _report("service conformance")


def test_fuzz_mutations(listing1_source):
    data = listing1_source.encode("utf-8")
    rng = random.Random(1337)
    programs = 0
    diagnostics = 0
    for _ in range(10_000):
        mutated = bytearray(data)
        for _ in range(rng.randint(1, 8)):
            mutated[rng.randrange(len(mutated))] = rng.randrange(256)
        text = mutated.decode("utf-8", errors="replace")
        try:
            parse(text)
            programs += 1
        except ParseError:
            diagnostics += 1
        # Anything else escaping is a crash and fails the test.
    assert programs + diagnostics == 10_000
    _report(f"fuzz (10000 mutations: {programs} programs, {diagnostics} diagnosed)")
