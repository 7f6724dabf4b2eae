import json

import pytest

from aptly import parse, validate
from aptly.diagnostics import RegistryError
from aptly.registry import (
    BuiltinSig,
    Registry,
    is_color_text,
    load_registry,
    load_seed_registry,
    seed_registry_path,
)


def codes(diags):
    return [d.code for d in diags]


def write_registry(tmp_path, doc):
    path = tmp_path / "registry.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


# -- loading -------------------------------------------------------------


def test_seed_registry_has_at_least_twelve_types():
    # Oracle: count the entries in the shipped file itself.
    doc = json.loads(seed_registry_path().read_text(encoding="utf-8"))
    assert len(doc["components"]) >= 12
    registry = load_seed_registry()
    assert len(registry.schemas) == len(doc["components"])
    assert "Screen" in registry.schemas
    assert registry.schemas["Screen"].container


def test_seed_numbers_only_is_boolean():
    registry = load_seed_registry()
    assert registry.schemas["TextBox"].properties["NumbersOnly"] == "boolean"


def test_registry_missing_screen(tmp_path):
    path = write_registry(
        tmp_path,
        {"version": 1, "components": {"Button": {"visible": True, "container": False}}},
    )
    with pytest.raises(RegistryError) as err:
        load_registry(path)
    assert codes(err.value.diagnostics) == ["E_REGISTRY_MISSING_SCREEN"]


def test_empty_file_is_parse_error(tmp_path):
    path = tmp_path / "registry.json"
    path.write_text("", encoding="utf-8")
    with pytest.raises(RegistryError) as err:
        load_registry(path)
    assert codes(err.value.diagnostics) == ["E_REGISTRY_PARSE"]


def test_unknown_keys_rejected(tmp_path):
    path = write_registry(
        tmp_path,
        {
            "version": 1,
            "components": {"Screen": {"visible": True, "container": True, "palette": 3}},
        },
    )
    with pytest.raises(RegistryError) as err:
        load_registry(path)
    assert codes(err.value.diagnostics) == ["E_REGISTRY_PARSE"]


def test_wrong_version_rejected(tmp_path):
    path = write_registry(tmp_path, {"version": 2, "components": {}})
    with pytest.raises(RegistryError) as err:
        load_registry(path)
    assert codes(err.value.diagnostics) == ["E_REGISTRY_PARSE"]


def test_bad_prop_type_rejected(tmp_path):
    path = write_registry(
        tmp_path,
        {
            "version": 1,
            "components": {
                "Screen": {
                    "visible": True,
                    "container": True,
                    "properties": {"Title": "varchar"},
                }
            },
        },
    )
    with pytest.raises(RegistryError):
        load_registry(path)


def test_color_values():
    assert is_color_text("Red")
    assert is_color_text("red")
    assert is_color_text("#A1B2C3")
    assert is_color_text("#00ff88")
    assert not is_color_text("melon-ish")
    assert not is_color_text("#12345")


# -- validation ----------------------------------------------------------


def test_listing1_validates_clean(listing1_program, registry):
    assert validate(listing1_program, registry) == []


def check(source, registry):
    return validate(parse(source), registry)


def test_unknown_component_type(registry):
    diags = check("Screen1 = Screen()\nFoo = Widget(Screen1)\n", registry)
    assert codes(diags) == ["E_UNKNOWN_COMPONENT_TYPE"]
    assert diags[0].span.line == 2


def test_unknown_property(registry):
    diags = check('Screen1 = Screen()\nB = Button(Screen1, Caption = "x")\n', registry)
    assert codes(diags) == ["E_UNKNOWN_PROPERTY"]


def test_property_type_mismatch(registry):
    diags = check(
        'Screen1 = Screen()\nHA1 = HorizontalArrangement(Screen1)\n'
        'EarthWeight = TextBox(HA1, NumbersOnly = "yes")\n',
        registry,
    )
    assert codes(diags) == ["E_PROPERTY_TYPE"]


def test_color_property_accepts_named_and_hex(registry):
    assert check(
        'Screen1 = Screen()\nB = Button(Screen1, BackgroundColor = "Red")\n', registry
    ) == []
    assert check(
        'Screen1 = Screen()\nB = Button(Screen1, BackgroundColor = "#A1B2C3")\n',
        registry,
    ) == []
    diags = check(
        'Screen1 = Screen()\nB = Button(Screen1, BackgroundColor = "melon")\n', registry
    )
    assert codes(diags) == ["E_PROPERTY_TYPE"]


def test_not_container(registry):
    diags = check(
        "Screen1 = Screen()\nL = Label(Screen1)\nB = Button(L)\n", registry
    )
    assert codes(diags) == ["E_NOT_CONTAINER"]


def test_unknown_event(registry):
    diags = check(
        "Screen1 = Screen()\nB = Button(Screen1)\nwhen B.Swiped():\n  set x = 1\n",
        registry,
    )
    assert codes(diags) == ["E_UNKNOWN_EVENT"]


def test_event_arity(registry):
    diags = check(
        "Screen1 = Screen()\nB = Button(Screen1)\nwhen B.Click(extra):\n  set x = 1\n",
        registry,
    )
    assert codes(diags) == ["E_EVENT_ARITY"]


def test_unknown_builtin(registry):
    diags = check(
        "Screen1 = Screen()\ninitialize g = frobnicate(1)\n", registry
    )
    assert codes(diags) == ["E_UNKNOWN_BUILTIN"]


def test_builtin_arity(registry):
    diags = check(
        "Screen1 = Screen()\ninitialize g = dictionaries_lookup(1, 2)\n", registry
    )
    assert codes(diags) == ["E_ARITY"]


def test_procedure_arity(registry):
    source = (
        "Screen1 = Screen()\nB = Button(Screen1)\n"
        "to f(a):\n  return a\n"
        "when B.Click():\n  call f(1, 2)\n"
    )
    assert codes(check(source, registry)) == ["E_ARITY"]


def test_procedure_without_result_not_a_value(registry):
    source = (
        "Screen1 = Screen()\nB = Button(Screen1)\n"
        "to f():\n  set x = 1\n"
        "when B.Click():\n  set y = call f()\n"
    )
    assert codes(check(source, registry)) == ["E_ARITY"]


def test_method_without_result_not_a_value(registry):
    source = (
        "Screen1 = Screen()\nT = TextBox(Screen1)\nB = Button(Screen1)\n"
        "when B.Click():\n  set y = call T.RequestFocus()\n"
    )
    assert codes(check(source, registry)) == ["E_ARITY"]


def test_unknown_method(registry):
    source = (
        "Screen1 = Screen()\nT = TextBox(Screen1)\nB = Button(Screen1)\n"
        "when B.Click():\n  call T.Launch()\n"
    )
    assert codes(check(source, registry)) == ["E_UNRESOLVED_NAME"]


def test_unresolved_local(registry):
    source = (
        "Screen1 = Screen()\nB = Button(Screen1)\n"
        "when B.Click():\n  set x = y + 1\n"
    )
    assert codes(check(source, registry)) == ["E_UNRESOLVED_NAME"]


def test_local_visible_after_assignment(registry):
    source = (
        "Screen1 = Screen()\nB = Button(Screen1)\n"
        "when B.Click():\n  set x = 1\n  set y = x + 1\n"
    )
    assert check(source, registry) == []


def test_unresolved_global(registry):
    source = "Screen1 = Screen()\nto f():\n  return global nope\n"
    assert codes(check(source, registry)) == ["E_UNRESOLVED_NAME"]


def test_unknown_component_instance(registry):
    source = (
        "Screen1 = Screen()\nB = Button(Screen1)\n"
        'when B.Click():\n  set Ghost.Text = "x"\n'
    )
    assert codes(check(source, registry)) == ["E_UNRESOLVED_NAME"]


def test_diagnostics_sorted_by_span(registry):
    source = (
        "Screen1 = Screen()\n"
        "Foo = Widget(Screen1)\n"
        'B = Button(Screen1, Caption = "x")\n'
        "initialize g = frobnicate(1)\n"
    )
    diags = check(source, registry)
    assert [d.span.line for d in diags] == sorted(d.span.line for d in diags)
    assert len(diags) == 3


def test_monotonicity_added_schemas_keep_verdict(listing1_program, registry):
    assert validate(listing1_program, registry) == []
    extended = Registry(
        schemas={
            **registry.schemas,
            "Widget": registry.schemas["Label"],
        },
        builtins={**registry.builtins, "widget_spin": BuiltinSig(1, True)},
    )
    assert validate(listing1_program, extended) == []


def test_validate_is_deterministic(listing1_program, registry):
    bad = parse("Screen1 = Screen()\nFoo = Widget(Screen1)\nBar = Gadget(Screen1)\n")
    assert validate(bad, registry) == validate(bad, registry)
