"""AST node definitions for Aptly programs.

Nodes are frozen dataclasses; sequence fields are normalised to tuples at
construction so whole programs compare structurally with ``==``. Source spans
are carried for diagnostics but excluded from equality: where a node came
from never affects what it means. Number literals keep their source text so
printing never reformats a value the author wrote.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import (
    DEFAULT_SPAN,
    Diagnostic,
    E_DUP_NAME,
    E_EMPTY_PROGRAM,
    E_RETURN_POSITION,
    E_SYNTAX,
    E_UNDECLARED_PARENT,
    SourceSpan,
    sort_diagnostics,
)

SCREEN_TYPE = "Screen"

BINARY_OPS = ("+", "-", "*", "/", "=", "!=", "<", "<=", ">", ">=", "and", "or")
COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
UNARY_OPS = ("not", "negate")


def _span_field():
    return field(default=DEFAULT_SPAN, compare=False, repr=False)


def _freeze(node, *names: str) -> None:
    for name in names:
        object.__setattr__(node, name, tuple(getattr(node, name)))


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()


class Literal(Expr):
    """Base class for literal values (also used outside expressions)."""

    __slots__ = ()


class Stmt:
    """Base class for statement nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class NumberLit(Literal):
    # Decimal source text, optionally signed. Never reformatted.
    text: str
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("empty number literal")


@dataclass(frozen=True)
class TextLit(Literal):
    value: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class BoolLit(Literal):
    value: bool
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ListLit(Literal):
    items: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "items")


@dataclass(frozen=True)
class DictLit(Literal):
    # Ordered (key, value) pairs; keys unique.
    entries: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "entries")
        object.__setattr__(
            self, "entries", tuple((k, v) for k, v in self.entries)
        )
        keys = [k for k, _ in self.entries]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate dictionary key")


@dataclass(frozen=True)
class GlobalRef(Expr):
    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class LocalRef(Expr):
    name: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class PropertyRead(Expr):
    component: str
    property: str
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ProcCall(Expr):
    name: str
    args: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "args")


@dataclass(frozen=True)
class BuiltinCall(Expr):
    name: str
    args: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "args")


@dataclass(frozen=True)
class MethodCall(Expr):
    component: str
    method: str
    args: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "args")


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.op!r}")


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class SetProperty(Stmt):
    component: str
    property: str
    value: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class SetGlobal(Stmt):
    name: str
    value: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class SetLocal(Stmt):
    name: str
    value: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class CallProcedure(Stmt):
    name: str
    args: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "args")


@dataclass(frozen=True)
class CallMethod(Stmt):
    component: str
    method: str
    args: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "args")


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then_body: tuple
    # (condition, body) pairs in source order.
    elifs: tuple = ()
    else_body: Optional[tuple] = None
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "then_body", "elifs")
        object.__setattr__(
            self, "elifs", tuple((c, tuple(b)) for c, b in self.elifs)
        )
        if self.else_body is not None:
            object.__setattr__(self, "else_body", tuple(self.else_body))
        if not self.then_body:
            raise ValueError("empty if body")
        for _, body in self.elifs:
            if not body:
                raise ValueError("empty elif body")
        if self.else_body is not None and not self.else_body:
            raise ValueError("empty else body")


@dataclass(frozen=True)
class ForEach(Stmt):
    var: str
    items: Expr
    body: tuple
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "body")
        if not self.body:
            raise ValueError("empty loop body")


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: tuple
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "body")
        if not self.body:
            raise ValueError("empty loop body")


@dataclass(frozen=True)
class Return(Stmt):
    value: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    type_name: str
    parent: Optional[str]
    # Ordered (property name, literal) pairs as written.
    properties: tuple = ()
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "properties")


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    init: Expr
    span: SourceSpan = _span_field()


@dataclass(frozen=True)
class ProcedureDecl:
    name: str
    params: tuple
    body: tuple
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "params", "body")
        if not self.body:
            raise ValueError("empty procedure body")

    @property
    def has_result(self) -> bool:
        return isinstance(self.body[-1], Return)


@dataclass(frozen=True)
class EventHandler:
    component: str
    event: str
    params: tuple
    body: tuple
    span: SourceSpan = _span_field()

    def __post_init__(self) -> None:
        _freeze(self, "params", "body")
        if not self.body:
            raise ValueError("empty handler body")


@dataclass(frozen=True)
class Program:
    components: tuple = ()
    globals: tuple = ()
    procedures: tuple = ()
    handlers: tuple = ()

    def __post_init__(self) -> None:
        _freeze(self, "components", "globals", "procedures", "handlers")

    def component_types(self) -> dict:
        return {c.name: c.type_name for c in self.components}


def structural_equal(a: Program, b: Program) -> bool:
    """True iff the two programs are identical ignoring source spans."""
    return a == b


def _returns_anywhere(stmts) -> list:
    found = []
    for s in stmts:
        if isinstance(s, Return):
            found.append(s)
        elif isinstance(s, If):
            found += _returns_anywhere(s.then_body)
            for _, body in s.elifs:
                found += _returns_anywhere(body)
            if s.else_body:
                found += _returns_anywhere(s.else_body)
        elif isinstance(s, (ForEach, While)):
            found += _returns_anywhere(s.body)
    return found


def program_invariant_errors(program: Program) -> list[Diagnostic]:
    """Registry-free structural checks on a Program.

    Covers uniqueness of names, parent-before-child declaration order, the
    single-Screen rule, and return-statement placement.
    """
    diags: list[Diagnostic] = []

    if not program.components:
        diags.append(
            Diagnostic(E_EMPTY_PROGRAM, "program declares no Screen component")
        )
        return sort_diagnostics(diags)

    screens = [c for c in program.components if c.type_name == SCREEN_TYPE]
    if not screens:
        diags.append(
            Diagnostic(
                E_EMPTY_PROGRAM,
                "program declares no Screen component",
                program.components[0].span,
            )
        )
    elif len(screens) > 1:
        diags.append(
            Diagnostic(
                E_SYNTAX,
                "only one Screen declaration is allowed",
                screens[1].span,
            )
        )
    if program.components[0].type_name != SCREEN_TYPE and screens:
        diags.append(
            Diagnostic(
                E_SYNTAX,
                "the Screen must be declared before any other component",
                program.components[0].span,
            )
        )

    seen: dict[str, ComponentDecl] = {}
    for comp in program.components:
        if comp.name in seen:
            diags.append(
                Diagnostic(
                    E_DUP_NAME,
                    f"duplicate component name {comp.name!r}",
                    comp.span,
                )
            )
        if comp.type_name == SCREEN_TYPE:
            if comp.parent is not None:
                diags.append(
                    Diagnostic(
                        E_SYNTAX,
                        "a Screen declaration takes no parent",
                        comp.span,
                    )
                )
        else:
            if comp.parent is None:
                diags.append(
                    Diagnostic(
                        E_SYNTAX,
                        f"component {comp.name!r} needs a parent",
                        comp.span,
                    )
                )
            elif comp.parent not in seen:
                diags.append(
                    Diagnostic(
                        E_UNDECLARED_PARENT,
                        f"parent {comp.parent!r} is not declared before {comp.name!r}",
                        comp.span,
                    )
                )
        seen[comp.name] = comp

    for kind, decls in (("global", program.globals), ("procedure", program.procedures)):
        names: set[str] = set()
        for d in decls:
            if d.name in names:
                diags.append(
                    Diagnostic(E_DUP_NAME, f"duplicate {kind} name {d.name!r}", d.span)
                )
            names.add(d.name)

    pairs: set[tuple[str, str]] = set()
    for h in program.handlers:
        key = (h.component, h.event)
        if key in pairs:
            diags.append(
                Diagnostic(
                    E_DUP_NAME,
                    f"duplicate handler for {h.component}.{h.event}",
                    h.span,
                )
            )
        pairs.add(key)

    for proc in program.procedures:
        if len(set(proc.params)) != len(proc.params):
            diags.append(
                Diagnostic(E_DUP_NAME, f"duplicate parameter in {proc.name!r}", proc.span)
            )
        allowed = proc.body[-1] if isinstance(proc.body[-1], Return) else None
        for ret in _returns_anywhere(proc.body):
            if ret is not allowed:
                diags.append(
                    Diagnostic(
                        E_RETURN_POSITION,
                        "return must be the final statement of a procedure",
                        ret.span,
                    )
                )

    for handler in program.handlers:
        if len(set(handler.params)) != len(handler.params):
            diags.append(
                Diagnostic(
                    E_DUP_NAME,
                    f"duplicate parameter in {handler.component}.{handler.event}",
                    handler.span,
                )
            )
        for ret in _returns_anywhere(handler.body):
            diags.append(
                Diagnostic(
                    E_RETURN_POSITION,
                    "return is not allowed in an event handler",
                    ret.span,
                )
            )

    return sort_diagnostics(diags)
