import pytest

from aptly.diagnostics import ParseError
from aptly.lexer import tokenize


def kinds(tokens):
    return [t.kind for t in tokens]


def texts(tokens):
    return [(t.kind, t.text) for t in tokens]


def test_event_header_line():
    tokens = tokenize("when Calculate.Click():")
    assert texts(tokens) == [
        ("keyword", "when"),
        ("identifier", "Calculate"),
        ("punctuation", "."),
        ("identifier", "Click"),
        ("punctuation", "("),
        ("punctuation", ")"),
        ("punctuation", ":"),
        ("newline", ""),
        ("eof", ""),
    ]


def test_empty_input_is_just_eof():
    assert kinds(tokenize("")) == ["eof"]


def test_blank_lines_produce_no_tokens():
    assert kinds(tokenize("\n\n   \n")) == ["eof"]


def test_unterminated_string():
    with pytest.raises(ParseError) as err:
        tokenize('"abc')
    diag = err.value.diagnostics[0]
    assert diag.code == "E_UNTERMINATED_STRING"
    assert diag.span.line == 1


def test_tab_in_indentation():
    with pytest.raises(ParseError) as err:
        tokenize("to f():\n\treturn 1\n")
    assert err.value.diagnostics[0].code == "E_TAB_INDENT"
    assert err.value.diagnostics[0].span.line == 2


def test_tab_elsewhere_is_bad_char():
    with pytest.raises(ParseError) as err:
        tokenize("x = Screen(\t)")
    assert err.value.diagnostics[0].code == "E_BAD_CHAR"


def test_comments_rejected():
    with pytest.raises(ParseError) as err:
        tokenize("# a comment\n")
    assert err.value.diagnostics[0].code == "E_BAD_CHAR"


def test_indent_dedent_balanced():
    tokens = tokenize("to f():\n  return 1\n")
    ks = kinds(tokens)
    assert ks.count("indent") == ks.count("dedent") == 1
    assert ks[-1] == "eof"


def test_nested_blocks_close_at_eof():
    tokens = tokenize("to f():\n  if a:\n    set x = 1")
    ks = kinds(tokens)
    assert ks.count("indent") == ks.count("dedent") == 2


def test_inconsistent_dedent():
    with pytest.raises(ParseError) as err:
        tokenize("to f():\n    set x = 1\n  set y = 2\n")
    assert err.value.diagnostics[0].code == "E_SYNTAX"


def test_string_escapes_decode():
    tokens = tokenize(r'"a\nb\tc\\d\"e"')
    assert tokens[0].kind == "string"
    assert tokens[0].text == 'a\nb\tc\\d"e'


def test_single_quoted_strings():
    tokens = tokenize("'not found'")
    assert tokens[0].kind == "string"
    assert tokens[0].text == "not found"


def test_unknown_escape_rejected():
    with pytest.raises(ParseError) as err:
        tokenize(r'"\q"')
    assert err.value.diagnostics[0].code == "E_BAD_CHAR"


def test_unicode_comparison_aliases_normalize():
    tokens = tokenize("a \u2260 b \u2264 c \u2265 d")
    ops = [t.text for t in tokens if t.kind == "punctuation"]
    assert ops == ["!=", "<=", ">="]


def test_number_text_is_preserved():
    tokens = tokenize("0.380 12 100.5")
    assert [t.text for t in tokens if t.kind == "number"] == ["0.380", "12", "100.5"]


def test_bracket_continuation_spans_lines():
    tokens = tokenize('initialize g = {"a": 1,\n  "b": 2}\n')
    ks = kinds(tokens)
    assert "indent" not in ks
    assert ks.count("newline") == 1


def test_unclosed_bracket_at_eof():
    with pytest.raises(ParseError) as err:
        tokenize("initialize g = [1, 2")
    assert err.value.diagnostics[0].code == "E_SYNTAX"


def test_bad_character():
    with pytest.raises(ParseError) as err:
        tokenize("x = 1 @ 2")
    diag = err.value.diagnostics[0]
    assert diag.code == "E_BAD_CHAR"
    assert diag.span.column == 7


def test_spans_are_one_based_and_in_bounds():
    source = "when Calculate.Click():"
    for tok in tokenize(source):
        assert tok.span.line == 1
        assert 1 <= tok.span.column <= len(source) + 1
