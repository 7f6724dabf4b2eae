import pytest

from aptly import compile_program, parse, validate
from aptly.backends import NearestEchoBackend, ScriptedBackend
from aptly.diagnostics import (
    BackendError,
    GenerationError,
    RequestError,
)
from aptly.genpipe import (
    EditRequest,
    GenerationRequest,
    MAX_ATTEMPTS,
    STOP_MARKER,
    extract_code,
    edit,
    generate,
    synthesize_edit_prompt,
    synthesize_prompt,
)
from aptly.retrieval import Corpus, ExamplePair, MockEmbedder, corpus_build

from conftest import GOLDENS

PAIR_A = ExamplePair(
    id="a-button",
    description="An app with one button",
    code='Screen1 = Screen()\nGo = Button(Screen1, Text = "Go")\n',
)
PAIR_B = ExamplePair(
    id="b-label",
    description="An app with one label",
    code='Screen1 = Screen()\nTitle = Label(Screen1, Text = "Hi")\n',
)


# -- prompt synthesis -------------------------------------------------------


def test_prompt_matches_golden():
    prompt = synthesize_prompt("A plain empty app", [PAIR_A, PAIR_B])
    golden = (GOLDENS / "prompt_two_examples.txt").read_text(encoding="utf-8")
    assert prompt == golden


def test_prompt_without_examples_matches_golden():
    prompt = synthesize_prompt("A plain empty app", [])
    golden = (GOLDENS / "prompt_no_examples.txt").read_text(encoding="utf-8")
    assert prompt == golden


def test_most_similar_example_sits_last():
    prompt = synthesize_prompt("query", [PAIR_A, PAIR_B])
    assert prompt.index(PAIR_B.description) < prompt.index(PAIR_A.description)
    assert prompt.endswith("### Aptly:\n")


def test_prompt_is_referentially_transparent():
    args = ("A plain empty app", [PAIR_A, PAIR_B])
    assert synthesize_prompt(*args) == synthesize_prompt(*args)


def test_edit_prompt_matches_golden():
    prompt = synthesize_edit_prompt(PAIR_A.code, "Make the button bigger", [PAIR_B])
    golden = (GOLDENS / "edit_prompt.txt").read_text(encoding="utf-8")
    assert prompt == golden


def test_edit_prompt_requires_parseable_code():
    with pytest.raises(RequestError) as err:
        synthesize_edit_prompt("not aptly at all (", "grow", [])
    assert err.value.diagnostics[0].code == "E_CURRENT_CODE_INVALID"


def test_edit_prompt_accepts_empty_instruction():
    # Empty instructions are rejected upstream by EditRequest, not here.
    prompt = synthesize_edit_prompt(PAIR_A.code, "", [])
    assert "### Edit:\n\n" in prompt


def test_empty_instruction_rejected_by_request():
    corpus = Corpus(pairs=(PAIR_A,), dimension=16)
    with pytest.raises(RequestError) as err:
        EditRequest(current_code=PAIR_A.code, instruction="   ", corpus=corpus)
    assert err.value.diagnostics[0].code == "E_BAD_REQUEST"


def test_empty_description_rejected_by_request():
    corpus = Corpus(pairs=(PAIR_A,), dimension=16)
    with pytest.raises(RequestError) as err:
        GenerationRequest(description=" \n ", corpus=corpus)
    assert err.value.diagnostics[0].code == "E_BAD_REQUEST"


# -- extract_code ------------------------------------------------------------


def test_extract_bare_code():
    assert extract_code("  Screen1 = Screen()\n") == "Screen1 = Screen()"


def test_extract_strips_fence():
    raw = "```aptly\nScreen1 = Screen()\n```"
    assert extract_code(raw) == "Screen1 = Screen()"
    raw_no_tag = "```\nScreen1 = Screen()\n```"
    assert extract_code(raw_no_tag) == "Screen1 = Screen()"


def test_extract_truncates_runaway_continuation():
    raw = (
        "Screen1 = Screen()\n\n"
        "### Description:\nanother app entirely\n### Aptly:\nScreen2 = Screen()"
    )
    assert extract_code(raw) == "Screen1 = Screen()"


def test_extracted_code_never_contains_stop_marker():
    raw = f"Screen1 = Screen()\n{STOP_MARKER} echo {STOP_MARKER}"
    assert STOP_MARKER not in extract_code(raw)


# -- generate -----------------------------------------------------------------


@pytest.fixture()
def echo_corpus(listing1_canonical):
    pairs = (
        ExamplePair(
            id="planet-weight",
            description="An app to calculate your weight on different planets",
            code=listing1_canonical,
        ),
        PAIR_A,
        PAIR_B,
    )
    return corpus_build(Corpus(pairs=pairs, dimension=256), MockEmbedder(256))


def test_generate_with_echo_backend(echo_corpus, registry):
    request = GenerationRequest(
        description="An app to calculate your weight on different planets",
        corpus=echo_corpus,
    )
    result = generate(request, registry, NearestEchoBackend())
    assert result.examples_used[0] == "planet-weight"
    assert result.attempts == 1
    program = parse(result.code)
    assert validate(program, registry) == []
    compile_program(program, registry)  # must be transpile-ready


def test_generate_echo_returns_stored_code_verbatim(echo_corpus, registry, listing1_canonical):
    request = GenerationRequest(
        description="An app to calculate your weight on different planets",
        corpus=echo_corpus,
        k=3,
    )
    result = generate(request, registry, NearestEchoBackend())
    assert result.code + "\n" == listing1_canonical


def test_generate_k_larger_than_corpus(echo_corpus, registry):
    request = GenerationRequest(
        description="An app to calculate your weight on different planets",
        corpus=echo_corpus,
        k=50,
    )
    result = generate(request, registry, NearestEchoBackend())
    assert len(result.examples_used) == len(echo_corpus.pairs)
    assert parse(result.code)


def test_generate_exhausts_on_garbage(echo_corpus, registry):
    backend = ScriptedBackend(["$garbage$", "more garbage", "still broken ("])
    request = GenerationRequest(description="anything", corpus=echo_corpus)
    with pytest.raises(GenerationError) as err:
        generate(request, registry, backend)
    assert err.value.attempts == MAX_ATTEMPTS == 3
    assert len(err.value.raw_completions) == 3
    assert err.value.diagnostics[0].code == "E_UNPARSEABLE_OUTPUT"


def test_repair_prompt_carries_diagnostics(echo_corpus, registry):
    backend = ScriptedBackend(["Widget1 = Widget()", "Screen1 = Screen()"])
    request = GenerationRequest(description="anything", corpus=echo_corpus, k=0)
    result = generate(request, registry, backend)
    assert result.attempts == 2
    repair_prompt = backend.calls[1]
    assert "### Errors:" in repair_prompt
    assert "E_" in repair_prompt
    assert repair_prompt.startswith(backend.calls[0])


def test_generate_succeeds_after_repair(echo_corpus, registry):
    backend = ScriptedBackend(["oops (", "```\nScreen1 = Screen()\n```"])
    request = GenerationRequest(description="anything", corpus=echo_corpus)
    result = generate(request, registry, backend)
    assert result.attempts == 2
    assert result.code == "Screen1 = Screen()"
    assert result.raw_completions[0] == "oops ("


def test_generate_backend_failure_propagates(echo_corpus, registry):
    backend = ScriptedBackend([])  # immediately exhausted -> transport error
    request = GenerationRequest(description="anything", corpus=echo_corpus)
    with pytest.raises(BackendError) as err:
        generate(request, registry, backend)
    assert err.value.diagnostics[0].code == "E_BACKEND"


def test_generate_result_code_is_stop_clean(echo_corpus, registry):
    backend = ScriptedBackend(
        ["Screen1 = Screen()\n### Description:\nrunaway next app"]
    )
    request = GenerationRequest(description="anything", corpus=echo_corpus)
    result = generate(request, registry, backend)
    assert STOP_MARKER not in result.code
    assert result.code == "Screen1 = Screen()"


# -- edit ----------------------------------------------------------------------


def test_edit_applies_scripted_change(echo_corpus, registry, listing1_canonical):
    revised = listing1_canonical.replace('Text = "Calculate"', 'Text = "Compute"')
    backend = ScriptedBackend([revised])
    request = EditRequest(
        current_code=listing1_canonical,
        instruction="Rename the Calculate button to Compute",
        corpus=echo_corpus,
    )
    result = edit(request, registry, backend)
    assert 'Text = "Compute"' in result.code
    assert validate(parse(result.code), registry) == []


def test_edit_rejects_invalid_current_code(echo_corpus, registry):
    backend = ScriptedBackend(["Screen1 = Screen()"])
    request = EditRequest(
        current_code="Widget1 = Widget()",
        instruction="do anything",
        corpus=echo_corpus,
    )
    with pytest.raises(RequestError) as err:
        edit(request, registry, backend)
    assert err.value.diagnostics[0].code == "E_CURRENT_CODE_INVALID"
    assert backend.calls == []  # rejected before any backend call


def test_edit_backend_failure_is_isolated(echo_corpus, registry, listing1_canonical):
    backend = ScriptedBackend([])
    request = EditRequest(
        current_code=listing1_canonical,
        instruction="Make the button bigger",
        corpus=echo_corpus,
    )
    with pytest.raises(BackendError):
        edit(request, registry, backend)
