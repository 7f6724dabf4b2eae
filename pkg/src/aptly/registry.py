"""Component and builtin schemas, plus semantic validation of Programs.

Schemas live in a versioned JSON file (see ``data/registry.json`` for the
bundled seed set). Loading is strict: unknown keys or malformed entries fail
loudly instead of silently producing a registry that accepts bad programs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional

from . import astnodes as ast
from .diagnostics import (
    Diagnostic,
    E_ARITY,
    E_EVENT_ARITY,
    E_NOT_CONTAINER,
    E_PROPERTY_TYPE,
    E_REGISTRY_MISSING_SCREEN,
    E_REGISTRY_PARSE,
    E_UNKNOWN_BUILTIN,
    E_UNKNOWN_COMPONENT_TYPE,
    E_UNKNOWN_EVENT,
    E_UNKNOWN_PROPERTY,
    E_UNRESOLVED_NAME,
    RegistryError,
    SourceSpan,
    sort_diagnostics,
)

REGISTRY_VERSION = 1

PROP_TYPES = frozenset(
    ("text", "number", "boolean", "color", "asset-path", "text-list")
)

# Named colors accepted for color-typed properties, next to #RRGGBB.
NAMED_COLORS = frozenset(
    (
        "black", "blue", "cyan", "darkgray", "gray", "green", "lightgray",
        "magenta", "orange", "pink", "red", "white", "yellow",
    )
)

_HEX_COLOR = re.compile(r"^#[0-9A-Fa-f]{6}$")


@dataclass(frozen=True)
class MethodSig:
    params: tuple
    has_result: bool


@dataclass(frozen=True)
class BuiltinSig:
    arity: int
    has_result: bool


@dataclass(frozen=True)
class ComponentSchema:
    type_name: str
    visible: bool
    container: bool
    properties: Mapping[str, str]
    events: Mapping[str, tuple]
    methods: Mapping[str, MethodSig]


@dataclass(frozen=True)
class Registry:
    schemas: Mapping[str, ComponentSchema]
    builtins: Mapping[str, BuiltinSig]

    def schema_for(self, type_name: str) -> Optional[ComponentSchema]:
        return self.schemas.get(type_name)


def seed_registry_path() -> Path:
    return Path(str(resources.files("aptly").joinpath("data/registry.json")))


def load_seed_registry() -> Registry:
    return load_registry(seed_registry_path())


def _parse_fail(message: str) -> RegistryError:
    return RegistryError([Diagnostic(E_REGISTRY_PARSE, message)])


def load_registry(path) -> Registry:
    """Load and strictly check a registry file; raises RegistryError."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _parse_fail(f"cannot read registry file: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise _parse_fail(f"registry file is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict):
        raise _parse_fail("registry document must be a JSON object")
    unknown = set(doc) - {"version", "components", "builtins"}
    if unknown:
        raise _parse_fail(f"unknown registry keys: {sorted(unknown)}")
    if doc.get("version") != REGISTRY_VERSION:
        raise _parse_fail(
            f"unsupported registry version {doc.get('version')!r}; expected {REGISTRY_VERSION}"
        )

    components = doc.get("components")
    if not isinstance(components, dict):
        raise _parse_fail("'components' must be an object")
    schemas: dict[str, ComponentSchema] = {}
    for type_name, entry in components.items():
        schemas[type_name] = _parse_schema(type_name, entry)

    builtins_doc = doc.get("builtins", {})
    if not isinstance(builtins_doc, dict):
        raise _parse_fail("'builtins' must be an object")
    builtins: dict[str, BuiltinSig] = {}
    for name, entry in builtins_doc.items():
        if not isinstance(entry, dict) or set(entry) != {"arity", "has_result"}:
            raise _parse_fail(f"builtin {name!r} must have exactly arity and has_result")
        if not isinstance(entry["arity"], int) or entry["arity"] < 0:
            raise _parse_fail(f"builtin {name!r} has a bad arity")
        if not isinstance(entry["has_result"], bool):
            raise _parse_fail(f"builtin {name!r} has a bad has_result")
        builtins[name] = BuiltinSig(arity=entry["arity"], has_result=entry["has_result"])

    if ast.SCREEN_TYPE not in schemas:
        raise RegistryError(
            [Diagnostic(E_REGISTRY_MISSING_SCREEN, "registry has no Screen component type")]
        )
    if not schemas[ast.SCREEN_TYPE].container:
        raise _parse_fail("the Screen component type must be a container")
    return Registry(schemas=schemas, builtins=builtins)


def _parse_schema(type_name: str, entry) -> ComponentSchema:
    if not isinstance(entry, dict):
        raise _parse_fail(f"component {type_name!r} must be an object")
    unknown = set(entry) - {"visible", "container", "properties", "events", "methods"}
    if unknown:
        raise _parse_fail(f"component {type_name!r} has unknown keys: {sorted(unknown)}")
    for key in ("visible", "container"):
        if not isinstance(entry.get(key), bool):
            raise _parse_fail(f"component {type_name!r} needs a boolean {key!r}")

    properties = entry.get("properties", {})
    if not isinstance(properties, dict):
        raise _parse_fail(f"component {type_name!r} properties must be an object")
    for prop, ptype in properties.items():
        if ptype not in PROP_TYPES:
            raise _parse_fail(
                f"property {type_name}.{prop} has unknown type {ptype!r}"
            )

    events_doc = entry.get("events", {})
    if not isinstance(events_doc, dict):
        raise _parse_fail(f"component {type_name!r} events must be an object")
    events = {}
    for event, params in events_doc.items():
        if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
            raise _parse_fail(f"event {type_name}.{event} params must be a string list")
        events[event] = tuple(params)

    methods_doc = entry.get("methods", {})
    if not isinstance(methods_doc, dict):
        raise _parse_fail(f"component {type_name!r} methods must be an object")
    methods = {}
    for method, sig in methods_doc.items():
        if not isinstance(sig, dict) or set(sig) != {"params", "has_result"}:
            raise _parse_fail(
                f"method {type_name}.{method} must have exactly params and has_result"
            )
        params = sig["params"]
        if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
            raise _parse_fail(f"method {type_name}.{method} params must be a string list")
        if not isinstance(sig["has_result"], bool):
            raise _parse_fail(f"method {type_name}.{method} has a bad has_result")
        methods[method] = MethodSig(params=tuple(params), has_result=sig["has_result"])

    return ComponentSchema(
        type_name=type_name,
        visible=entry["visible"],
        container=entry["container"],
        properties=dict(properties),
        events=events,
        methods=methods,
    )


def is_color_text(value: str) -> bool:
    return value.lower() in NAMED_COLORS or bool(_HEX_COLOR.match(value))


def literal_matches(prop_type: str, literal: ast.Literal) -> bool:
    if prop_type == "number":
        return isinstance(literal, ast.NumberLit)
    if prop_type == "boolean":
        return isinstance(literal, ast.BoolLit)
    if prop_type == "color":
        return isinstance(literal, ast.TextLit) and is_color_text(literal.value)
    if prop_type in ("text", "asset-path", "text-list"):
        return isinstance(literal, ast.TextLit)
    return False


class _Scope:
    """Function-scoped locals: a name stays visible once introduced."""

    def __init__(self, params):
        self.names = set(params)

    def add(self, name: str) -> None:
        self.names.add(name)

    def __contains__(self, name: str) -> bool:
        return name in self.names


def validate(program: ast.Program, registry: Registry) -> list[Diagnostic]:
    """Semantic checks of a Program against a Registry.

    Returns an empty list iff the program is valid. Diagnostics are sorted
    by span so output is order-stable.
    """
    v = _Validator(program, registry)
    v.run()
    return sort_diagnostics(v.diags)


class _Validator:
    def __init__(self, program: ast.Program, registry: Registry):
        self.program = program
        self.registry = registry
        self.diags: list[Diagnostic] = []
        self.comp_types = program.component_types()
        self.globals = {g.name for g in program.globals}
        self.procs = {p.name: p for p in program.procedures}

    def report(self, code: str, message: str, span: SourceSpan) -> None:
        self.diags.append(Diagnostic(code, message, span))

    def run(self) -> None:
        self._check_components()
        for g in self.program.globals:
            self._expr(g.init, _Scope(()))
        for proc in self.program.procedures:
            self._body(proc.body, _Scope(proc.params))
        for handler in self.program.handlers:
            self._check_handler(handler)

    # -- designer side -------------------------------------------------------

    def _check_components(self) -> None:
        for comp in self.program.components:
            schema = self.registry.schema_for(comp.type_name)
            if schema is None:
                self.report(
                    E_UNKNOWN_COMPONENT_TYPE,
                    f"unknown component type {comp.type_name!r}",
                    comp.span,
                )
                continue
            if comp.parent is not None:
                parent_schema = self.registry.schema_for(
                    self.comp_types.get(comp.parent, "")
                )
                if parent_schema is not None and not parent_schema.container:
                    self.report(
                        E_NOT_CONTAINER,
                        f"{comp.parent!r} cannot contain {comp.name!r}: "
                        f"{parent_schema.type_name} is not a container",
                        comp.span,
                    )
            for prop_name, literal in comp.properties:
                self._check_property(schema, comp, prop_name, literal)

    def _check_property(self, schema, comp, prop_name, literal) -> None:
        prop_type = schema.properties.get(prop_name)
        if prop_type is None:
            self.report(
                E_UNKNOWN_PROPERTY,
                f"{comp.type_name} has no property {prop_name!r}",
                getattr(literal, "span", comp.span),
            )
            return
        if not literal_matches(prop_type, literal):
            self.report(
                E_PROPERTY_TYPE,
                f"{comp.name}.{prop_name} expects a {prop_type} value",
                getattr(literal, "span", comp.span),
            )

    # -- behaviour side ------------------------------------------------------

    def _check_handler(self, handler: ast.EventHandler) -> None:
        schema = self._instance_schema(handler.component, handler.span)
        if schema is not None:
            params = schema.events.get(handler.event)
            if params is None:
                self.report(
                    E_UNKNOWN_EVENT,
                    f"{schema.type_name} has no event {handler.event!r}",
                    handler.span,
                )
            elif len(params) != len(handler.params):
                self.report(
                    E_EVENT_ARITY,
                    f"{handler.component}.{handler.event} takes {len(params)} "
                    f"parameter(s), handler names {len(handler.params)}",
                    handler.span,
                )
        self._body(handler.body, _Scope(handler.params))

    def _instance_schema(self, name: str, span: SourceSpan):
        type_name = self.comp_types.get(name)
        if type_name is None:
            self.report(E_UNRESOLVED_NAME, f"unknown component {name!r}", span)
            return None
        return self.registry.schema_for(type_name)

    def _body(self, body, scope: _Scope) -> None:
        for stmt in body:
            self._stmt(stmt, scope)

    def _stmt(self, stmt, scope: _Scope) -> None:
        if isinstance(stmt, ast.SetProperty):
            self._property_access(stmt.component, stmt.property, stmt.span)
            self._expr(stmt.value, scope)
        elif isinstance(stmt, ast.SetGlobal):
            if stmt.name not in self.globals:
                self.report(
                    E_UNRESOLVED_NAME, f"unknown global {stmt.name!r}", stmt.span
                )
            self._expr(stmt.value, scope)
        elif isinstance(stmt, ast.SetLocal):
            self._expr(stmt.value, scope)
            scope.add(stmt.name)
        elif isinstance(stmt, ast.CallProcedure):
            self._proc_call(stmt.name, stmt.args, stmt.span, need_result=False)
            for arg in stmt.args:
                self._expr(arg, scope)
        elif isinstance(stmt, ast.CallMethod):
            self._method_call(stmt, need_result=False)
            for arg in stmt.args:
                self._expr(arg, scope)
        elif isinstance(stmt, ast.If):
            self._expr(stmt.cond, scope)
            self._body(stmt.then_body, scope)
            for cond, body in stmt.elifs:
                self._expr(cond, scope)
                self._body(body, scope)
            if stmt.else_body:
                self._body(stmt.else_body, scope)
        elif isinstance(stmt, ast.ForEach):
            self._expr(stmt.items, scope)
            scope.add(stmt.var)
            self._body(stmt.body, scope)
        elif isinstance(stmt, ast.While):
            self._expr(stmt.cond, scope)
            self._body(stmt.body, scope)
        elif isinstance(stmt, ast.Return):
            self._expr(stmt.value, scope)

    def _property_access(self, component: str, prop: str, span: SourceSpan) -> None:
        schema = self._instance_schema(component, span)
        if schema is not None and prop not in schema.properties:
            self.report(
                E_UNKNOWN_PROPERTY,
                f"{schema.type_name} has no property {prop!r}",
                span,
            )

    def _proc_call(self, name, args, span, need_result: bool) -> None:
        proc = self.procs.get(name)
        if proc is None:
            self.report(E_UNRESOLVED_NAME, f"unknown procedure {name!r}", span)
            return
        if len(args) != len(proc.params):
            self.report(
                E_ARITY,
                f"procedure {name!r} takes {len(proc.params)} argument(s), got {len(args)}",
                span,
            )
        if need_result and not proc.has_result:
            self.report(
                E_ARITY,
                f"procedure {name!r} has no result and cannot be used as a value",
                span,
            )

    def _method_call(self, node, need_result: bool) -> None:
        schema = self._instance_schema(node.component, node.span)
        if schema is None:
            return
        sig = schema.methods.get(node.method)
        if sig is None:
            self.report(
                E_UNRESOLVED_NAME,
                f"{schema.type_name} has no method {node.method!r}",
                node.span,
            )
            return
        if len(node.args) != len(sig.params):
            self.report(
                E_ARITY,
                f"{node.component}.{node.method} takes {len(sig.params)} "
                f"argument(s), got {len(node.args)}",
                node.span,
            )
        if need_result and not sig.has_result:
            self.report(
                E_ARITY,
                f"{node.component}.{node.method} has no result and cannot be used as a value",
                node.span,
            )

    def _expr(self, expr, scope: _Scope) -> None:
        if isinstance(expr, (ast.NumberLit, ast.TextLit, ast.BoolLit, ast.ListLit, ast.DictLit)):
            return
        if isinstance(expr, ast.GlobalRef):
            if expr.name not in self.globals:
                self.report(
                    E_UNRESOLVED_NAME, f"unknown global {expr.name!r}", expr.span
                )
        elif isinstance(expr, ast.LocalRef):
            if expr.name not in scope:
                self.report(
                    E_UNRESOLVED_NAME, f"unknown variable {expr.name!r}", expr.span
                )
        elif isinstance(expr, ast.PropertyRead):
            self._property_access(expr.component, expr.property, expr.span)
        elif isinstance(expr, ast.ProcCall):
            self._proc_call(expr.name, expr.args, expr.span, need_result=True)
            for arg in expr.args:
                self._expr(arg, scope)
        elif isinstance(expr, ast.MethodCall):
            self._method_call(expr, need_result=True)
            for arg in expr.args:
                self._expr(arg, scope)
        elif isinstance(expr, ast.BuiltinCall):
            sig = self.registry.builtins.get(expr.name)
            if sig is None:
                self.report(
                    E_UNKNOWN_BUILTIN, f"unknown builtin {expr.name!r}", expr.span
                )
            elif len(expr.args) != sig.arity:
                self.report(
                    E_ARITY,
                    f"builtin {expr.name!r} takes {sig.arity} argument(s), "
                    f"got {len(expr.args)}",
                    expr.span,
                )
            for arg in expr.args:
                self._expr(arg, scope)
        elif isinstance(expr, ast.Binary):
            self._expr(expr.left, scope)
            self._expr(expr.right, scope)
        elif isinstance(expr, ast.Unary):
            self._expr(expr.operand, scope)
