"""Canonical text form for Aptly programs.

Each Program has exactly one rendering: 2-space indentation, double-quoted
strings, component declarations grouped on consecutive lines, and a blank
line before every other top-level form. The parser consumes this form back
into a structurally identical Program.
"""

from __future__ import annotations

from .astnodes import (
    Binary,
    BoolLit,
    BuiltinCall,
    CallMethod,
    CallProcedure,
    DictLit,
    EventHandler,
    Expr,
    ForEach,
    GlobalRef,
    If,
    ListLit,
    Literal,
    LocalRef,
    MethodCall,
    NumberLit,
    ProcCall,
    ProcedureDecl,
    Program,
    PropertyRead,
    Return,
    SetGlobal,
    SetLocal,
    SetProperty,
    Stmt,
    TextLit,
    Unary,
    While,
)

INDENT = "  "

_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ADD = 5
_PREC_MUL = 6
_PREC_NEG = 7
_PREC_ATOM = 9

_BINARY_PREC = {
    "or": _PREC_OR,
    "and": _PREC_AND,
    "=": _PREC_CMP,
    "!=": _PREC_CMP,
    "<": _PREC_CMP,
    "<=": _PREC_CMP,
    ">": _PREC_CMP,
    ">=": _PREC_CMP,
    "+": _PREC_ADD,
    "-": _PREC_ADD,
    "*": _PREC_MUL,
    "/": _PREC_MUL,
}

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def quote_text(value: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in value) + '"'


def print_literal(lit: Literal) -> str:
    if isinstance(lit, NumberLit):
        return lit.text
    if isinstance(lit, TextLit):
        return quote_text(lit.value)
    if isinstance(lit, BoolLit):
        return "True" if lit.value else "False"
    if isinstance(lit, ListLit):
        return "[" + ", ".join(print_literal(item) for item in lit.items) + "]"
    if isinstance(lit, DictLit):
        inner = ", ".join(
            f"{quote_text(k)}: {print_literal(v)}" for k, v in lit.entries
        )
        return "{" + inner + "}"
    raise TypeError(f"not a literal: {lit!r}")


def _render(expr: Expr) -> tuple[str, int]:
    if isinstance(expr, Literal):
        return print_literal(expr), _PREC_ATOM
    if isinstance(expr, LocalRef):
        return expr.name, _PREC_ATOM
    if isinstance(expr, GlobalRef):
        return f"global {expr.name}", _PREC_ATOM
    if isinstance(expr, PropertyRead):
        return f"{expr.component}.{expr.property}", _PREC_ATOM
    if isinstance(expr, ProcCall):
        return f"call {expr.name}({_args(expr.args)})", _PREC_ATOM
    if isinstance(expr, MethodCall):
        return f"call {expr.component}.{expr.method}({_args(expr.args)})", _PREC_ATOM
    if isinstance(expr, BuiltinCall):
        return f"{expr.name}({_args(expr.args)})", _PREC_ATOM
    if isinstance(expr, Binary):
        prec = _BINARY_PREC[expr.op]
        left = print_expr(expr.left, prec)
        right = print_expr(expr.right, prec + 1)
        return f"{left} {expr.op} {right}", prec
    if isinstance(expr, Unary):
        if expr.op == "not":
            return f"not {print_expr(expr.operand, _PREC_NOT)}", _PREC_NOT
        # A bare `-5` re-lexes as a signed number literal, so a negate around
        # a number literal must keep its parentheses to survive the trip.
        if isinstance(expr.operand, NumberLit):
            return f"-({expr.operand.text})", _PREC_NEG
        return f"-{print_expr(expr.operand, _PREC_NEG)}", _PREC_NEG
    raise TypeError(f"not an expression: {expr!r}")


def print_expr(expr: Expr, min_prec: int = 0) -> str:
    text, prec = _render(expr)
    return f"({text})" if prec < min_prec else text


def _args(args) -> str:
    return ", ".join(print_expr(a) for a in args)


def _emit_body(lines: list[str], body, depth: int) -> None:
    pad = INDENT * depth
    for stmt in body:
        _emit_stmt(lines, stmt, depth, pad)


def _emit_stmt(lines: list[str], stmt: Stmt, depth: int, pad: str) -> None:
    if isinstance(stmt, SetProperty):
        lines.append(f"{pad}set {stmt.component}.{stmt.property} = {print_expr(stmt.value)}")
    elif isinstance(stmt, SetGlobal):
        lines.append(f"{pad}set global {stmt.name} = {print_expr(stmt.value)}")
    elif isinstance(stmt, SetLocal):
        lines.append(f"{pad}set {stmt.name} = {print_expr(stmt.value)}")
    elif isinstance(stmt, CallProcedure):
        lines.append(f"{pad}call {stmt.name}({_args(stmt.args)})")
    elif isinstance(stmt, CallMethod):
        lines.append(f"{pad}call {stmt.component}.{stmt.method}({_args(stmt.args)})")
    elif isinstance(stmt, If):
        lines.append(f"{pad}if {print_expr(stmt.cond)}:")
        _emit_body(lines, stmt.then_body, depth + 1)
        for cond, body in stmt.elifs:
            lines.append(f"{pad}elif {print_expr(cond)}:")
            _emit_body(lines, body, depth + 1)
        if stmt.else_body is not None:
            lines.append(f"{pad}else:")
            _emit_body(lines, stmt.else_body, depth + 1)
    elif isinstance(stmt, ForEach):
        lines.append(f"{pad}for each {stmt.var} in {print_expr(stmt.items)}:")
        _emit_body(lines, stmt.body, depth + 1)
    elif isinstance(stmt, While):
        lines.append(f"{pad}while {print_expr(stmt.cond)}:")
        _emit_body(lines, stmt.body, depth + 1)
    elif isinstance(stmt, Return):
        lines.append(f"{pad}return {print_expr(stmt.value)}")
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def _component_line(comp) -> str:
    args = []
    if comp.parent is not None:
        args.append(comp.parent)
    args += [f"{name} = {print_literal(value)}" for name, value in comp.properties]
    return f"{comp.name} = {comp.type_name}({', '.join(args)})"


def _procedure_text(proc: ProcedureDecl) -> str:
    lines = [f"to {proc.name}({', '.join(proc.params)}):"]
    _emit_body(lines, proc.body, 1)
    return "\n".join(lines)


def _handler_text(handler: EventHandler) -> str:
    lines = [f"when {handler.component}.{handler.event}({', '.join(handler.params)}):"]
    _emit_body(lines, handler.body, 1)
    return "\n".join(lines)


def canonical_print(program: Program) -> str:
    """Render a Program in its unique canonical form (trailing newline)."""
    forms: list[str] = []
    if program.components:
        forms.append("\n".join(_component_line(c) for c in program.components))
    for g in program.globals:
        forms.append(f"initialize {g.name} = {print_expr(g.init)}")
    for proc in program.procedures:
        forms.append(_procedure_text(proc))
    for handler in program.handlers:
        forms.append(_handler_text(handler))
    return "\n\n".join(forms) + "\n"
