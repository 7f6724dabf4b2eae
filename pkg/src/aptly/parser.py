"""Recursive-descent parser turning Aptly source into a Program.

The grammar has four top-level forms, freely interleaved:

    Name = TypeName(Parent, Prop = literal, ...)   component declaration
    initialize name = expr                         global declaration
    to name(params):                               procedure
    when Component.Event(params):                  event handler

Bodies are indented statement blocks. Expression-position procedure and
method calls require the ``call`` keyword; builtin calls do not. The parser
never aborts the process: any failure raises ParseError with diagnostics.
"""

from __future__ import annotations

from .astnodes import (
    Binary,
    BoolLit,
    BuiltinCall,
    CallMethod,
    CallProcedure,
    ComponentDecl,
    DictLit,
    EventHandler,
    Expr,
    ForEach,
    GlobalDecl,
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
    SCREEN_TYPE,
    SetGlobal,
    SetLocal,
    SetProperty,
    Stmt,
    TextLit,
    Unary,
    While,
    program_invariant_errors,
)
from .diagnostics import (
    Diagnostic,
    E_DUP_NAME,
    E_EMPTY_PROGRAM,
    E_RETURN_POSITION,
    E_SYNTAX,
    E_UNDECLARED_PARENT,
    ParseError,
    SourceSpan,
)
from .lexer import (
    KIND_DEDENT,
    KIND_EOF,
    KIND_IDENT,
    KIND_INDENT,
    KIND_KEYWORD,
    KIND_NEWLINE,
    KIND_NUMBER,
    KIND_PUNCT,
    KIND_STRING,
    Token,
    tokenize,
)

_COMPARISONS = {"=": "=", "==": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def parse(source: str) -> Program:
    """Parse Aptly source text; raises ParseError with diagnostics on failure."""
    return _Parser(tokenize(source)).parse_program()


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != KIND_EOF:
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        wanted = what or (repr(text) if text else kind)
        self.fail(f"expected {wanted}, found {self._describe(self.peek())}")
        raise AssertionError("unreachable")

    def fail(self, message: str, span: SourceSpan | None = None, code: str = E_SYNTAX):
        raise ParseError([Diagnostic(code, message, span or self.peek().span)])

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind in (KIND_NEWLINE, KIND_INDENT, KIND_DEDENT, KIND_EOF):
            return f"end of {'input' if tok.kind == KIND_EOF else 'line'}" if tok.kind in (KIND_EOF, KIND_NEWLINE) else tok.kind
        return repr(tok.text)

    # -- top level ---------------------------------------------------------

    def parse_program(self) -> Program:
        components: list[ComponentDecl] = []
        globals_: list[GlobalDecl] = []
        procedures: list[ProcedureDecl] = []
        handlers: list[EventHandler] = []
        declared: dict[str, ComponentDecl] = {}
        screen_seen = False

        while not self.at(KIND_EOF):
            if self.accept(KIND_NEWLINE):
                continue
            tok = self.peek()
            if tok.kind == KIND_KEYWORD and tok.text == "initialize":
                globals_.append(self._global_decl(globals_))
            elif tok.kind == KIND_KEYWORD and tok.text == "to":
                procedures.append(self._procedure_decl(procedures))
            elif tok.kind == KIND_KEYWORD and tok.text == "when":
                handlers.append(self._event_handler(handlers))
            elif tok.kind == KIND_IDENT:
                comp = self._component_decl(declared, screen_seen)
                screen_seen = screen_seen or comp.type_name == SCREEN_TYPE
                declared[comp.name] = comp
                components.append(comp)
            else:
                self.fail(
                    "expected a component declaration, 'initialize', 'to' or 'when', "
                    f"found {self._describe(tok)}"
                )

        if not components:
            raise ParseError(
                [Diagnostic(E_EMPTY_PROGRAM, "program declares no Screen component")]
            )
        program = Program(
            components=tuple(components),
            globals=tuple(globals_),
            procedures=tuple(procedures),
            handlers=tuple(handlers),
        )
        invariants = program_invariant_errors(program)
        if invariants:
            raise ParseError(invariants)
        return program

    def _component_decl(self, declared, screen_seen: bool) -> ComponentDecl:
        name_tok = self.expect(KIND_IDENT, what="component name")
        if name_tok.text in declared:
            self.fail(
                f"duplicate component name {name_tok.text!r}",
                name_tok.span,
                E_DUP_NAME,
            )
        self.expect(KIND_PUNCT, "=")
        type_tok = self.expect(KIND_IDENT, what="component type")
        self.expect(KIND_PUNCT, "(")

        parent: str | None = None
        properties: list[tuple[str, Literal]] = []
        if not self.at(KIND_PUNCT, ")"):
            if self.at(KIND_IDENT) and not self._next_is_punct(1, "="):
                parent_tok = self.advance()
                parent = parent_tok.text
                if parent not in declared:
                    self.fail(
                        f"parent {parent!r} is not declared before {name_tok.text!r}",
                        parent_tok.span,
                        E_UNDECLARED_PARENT,
                    )
                if type_tok.text == SCREEN_TYPE:
                    self.fail("a Screen declaration takes no parent", parent_tok.span)
                if not self.at(KIND_PUNCT, ")"):
                    self.expect(KIND_PUNCT, ",")
                    self._property_list(properties)
            else:
                self._property_list(properties)
        self.expect(KIND_PUNCT, ")")
        self._end_of_line()

        if type_tok.text == SCREEN_TYPE:
            if screen_seen:
                self.fail("only one Screen declaration is allowed", name_tok.span)
        elif parent is None:
            self.fail(
                f"component {name_tok.text!r} needs a parent component",
                name_tok.span,
            )
        return ComponentDecl(
            name=name_tok.text,
            type_name=type_tok.text,
            parent=parent,
            properties=tuple(properties),
            span=name_tok.span,
        )

    def _next_is_punct(self, offset: int, text: str) -> bool:
        tok = self.peek(offset)
        return tok.kind == KIND_PUNCT and tok.text == text

    def _property_list(self, out: list) -> None:
        while True:
            prop_tok = self.expect(KIND_IDENT, what="property name")
            self.expect(KIND_PUNCT, "=")
            out.append((prop_tok.text, self._literal()))
            if not self.accept(KIND_PUNCT, ","):
                return

    def _global_decl(self, existing) -> GlobalDecl:
        self.expect(KIND_KEYWORD, "initialize")
        name_tok = self.expect(KIND_IDENT, what="global name")
        if any(g.name == name_tok.text for g in existing):
            self.fail(f"duplicate global name {name_tok.text!r}", name_tok.span, E_DUP_NAME)
        self.expect(KIND_PUNCT, "=")
        init = self._expr()
        self._end_of_line()
        return GlobalDecl(name=name_tok.text, init=init, span=name_tok.span)

    def _procedure_decl(self, existing) -> ProcedureDecl:
        self.expect(KIND_KEYWORD, "to")
        name_tok = self.expect(KIND_IDENT, what="procedure name")
        if any(p.name == name_tok.text for p in existing):
            self.fail(
                f"duplicate procedure name {name_tok.text!r}", name_tok.span, E_DUP_NAME
            )
        params = self._param_list(name_tok.text)
        self.expect(KIND_PUNCT, ":")
        body = self._block()
        self._check_returns(body, allow_final=True)
        return ProcedureDecl(
            name=name_tok.text, params=params, body=body, span=name_tok.span
        )

    def _event_handler(self, existing) -> EventHandler:
        self.expect(KIND_KEYWORD, "when")
        comp_tok = self.expect(KIND_IDENT, what="component name")
        self.expect(KIND_PUNCT, ".")
        event_tok = self.expect(KIND_IDENT, what="event name")
        if any(
            h.component == comp_tok.text and h.event == event_tok.text for h in existing
        ):
            self.fail(
                f"duplicate handler for {comp_tok.text}.{event_tok.text}",
                comp_tok.span,
                E_DUP_NAME,
            )
        params = self._param_list(f"{comp_tok.text}.{event_tok.text}")
        self.expect(KIND_PUNCT, ":")
        body = self._block()
        self._check_returns(body, allow_final=False)
        return EventHandler(
            component=comp_tok.text,
            event=event_tok.text,
            params=params,
            body=body,
            span=comp_tok.span,
        )

    def _param_list(self, owner: str) -> tuple:
        self.expect(KIND_PUNCT, "(")
        params: list[str] = []
        if not self.at(KIND_PUNCT, ")"):
            while True:
                tok = self.expect(KIND_IDENT, what="parameter name")
                if tok.text in params:
                    self.fail(
                        f"duplicate parameter {tok.text!r} in {owner}",
                        tok.span,
                        E_DUP_NAME,
                    )
                params.append(tok.text)
                if not self.accept(KIND_PUNCT, ","):
                    break
        self.expect(KIND_PUNCT, ")")
        return tuple(params)

    def _check_returns(self, body, allow_final: bool) -> None:
        def walk(stmts, final_slot: bool):
            for idx, stmt in enumerate(stmts):
                is_last = final_slot and idx == len(stmts) - 1
                if isinstance(stmt, Return):
                    if not (allow_final and is_last):
                        message = (
                            "return must be the final statement of a procedure"
                            if allow_final
                            else "return is not allowed in an event handler"
                        )
                        self.fail(message, stmt.span, E_RETURN_POSITION)
                elif isinstance(stmt, If):
                    walk(stmt.then_body, False)
                    for _, b in stmt.elifs:
                        walk(b, False)
                    if stmt.else_body:
                        walk(stmt.else_body, False)
                elif isinstance(stmt, (ForEach, While)):
                    walk(stmt.body, False)

        walk(body, True)

    # -- statements ----------------------------------------------------------

    def _block(self) -> tuple:
        self.expect(KIND_NEWLINE, what="end of line")
        self.expect(KIND_INDENT, what="an indented block")
        stmts: list[Stmt] = []
        while not self.at(KIND_DEDENT):
            if self.accept(KIND_NEWLINE):
                continue
            stmts.append(self._statement())
        self.expect(KIND_DEDENT)
        if not stmts:
            self.fail("empty block")
        return tuple(stmts)

    def _statement(self) -> Stmt:
        tok = self.peek()
        if tok.kind != KIND_KEYWORD:
            self.fail(f"expected a statement, found {self._describe(tok)}")
        if tok.text == "set":
            return self._set_stmt()
        if tok.text == "call":
            return self._call_stmt()
        if tok.text == "if":
            return self._if_stmt()
        if tok.text == "for":
            return self._for_stmt()
        if tok.text == "while":
            return self._while_stmt()
        if tok.text == "return":
            self.advance()
            value = self._expr()
            self._end_of_line()
            return Return(value=value, span=tok.span)
        self.fail(f"expected a statement, found {self._describe(tok)}")
        raise AssertionError("unreachable")

    def _set_stmt(self) -> Stmt:
        kw = self.expect(KIND_KEYWORD, "set")
        if self.accept(KIND_KEYWORD, "global"):
            name_tok = self.expect(KIND_IDENT, what="global name")
            self.expect(KIND_PUNCT, "=")
            value = self._expr()
            self._end_of_line()
            return SetGlobal(name=name_tok.text, value=value, span=kw.span)
        name_tok = self.expect(KIND_IDENT, what="a name")
        if self.accept(KIND_PUNCT, "."):
            prop_tok = self.expect(KIND_IDENT, what="property name")
            self.expect(KIND_PUNCT, "=")
            value = self._expr()
            self._end_of_line()
            return SetProperty(
                component=name_tok.text,
                property=prop_tok.text,
                value=value,
                span=kw.span,
            )
        self.expect(KIND_PUNCT, "=")
        value = self._expr()
        self._end_of_line()
        return SetLocal(name=name_tok.text, value=value, span=kw.span)

    def _call_stmt(self) -> Stmt:
        kw = self.expect(KIND_KEYWORD, "call")
        name_tok = self.expect(KIND_IDENT, what="procedure or component name")
        if self.accept(KIND_PUNCT, "."):
            method_tok = self.expect(KIND_IDENT, what="method name")
            args = self._call_args()
            self._end_of_line()
            return CallMethod(
                component=name_tok.text,
                method=method_tok.text,
                args=args,
                span=kw.span,
            )
        args = self._call_args()
        self._end_of_line()
        return CallProcedure(name=name_tok.text, args=args, span=kw.span)

    def _if_stmt(self) -> Stmt:
        kw = self.expect(KIND_KEYWORD, "if")
        cond = self._expr()
        self.expect(KIND_PUNCT, ":")
        then_body = self._block()
        elifs: list[tuple[Expr, tuple]] = []
        else_body = None
        while self.at(KIND_KEYWORD, "elif"):
            self.advance()
            elif_cond = self._expr()
            self.expect(KIND_PUNCT, ":")
            elifs.append((elif_cond, self._block()))
        if self.accept(KIND_KEYWORD, "else"):
            self.expect(KIND_PUNCT, ":")
            else_body = self._block()
        return If(
            cond=cond,
            then_body=then_body,
            elifs=tuple(elifs),
            else_body=else_body,
            span=kw.span,
        )

    def _for_stmt(self) -> Stmt:
        kw = self.expect(KIND_KEYWORD, "for")
        self.expect(KIND_KEYWORD, "each")
        var_tok = self.expect(KIND_IDENT, what="loop variable")
        self.expect(KIND_KEYWORD, "in")
        items = self._expr()
        self.expect(KIND_PUNCT, ":")
        body = self._block()
        return ForEach(var=var_tok.text, items=items, body=body, span=kw.span)

    def _while_stmt(self) -> Stmt:
        kw = self.expect(KIND_KEYWORD, "while")
        cond = self._expr()
        self.expect(KIND_PUNCT, ":")
        body = self._block()
        return While(cond=cond, body=body, span=kw.span)

    def _end_of_line(self) -> None:
        if self.at(KIND_EOF) or self.at(KIND_DEDENT):
            return
        self.expect(KIND_NEWLINE, what="end of line")

    # -- expressions ---------------------------------------------------------

    def _expr(self) -> Expr:
        return self._or_expr()

    def _or_expr(self) -> Expr:
        left = self._and_expr()
        while self.at(KIND_KEYWORD, "or"):
            tok = self.advance()
            left = Binary(op="or", left=left, right=self._and_expr(), span=tok.span)
        return left

    def _and_expr(self) -> Expr:
        left = self._not_expr()
        while self.at(KIND_KEYWORD, "and"):
            tok = self.advance()
            left = Binary(op="and", left=left, right=self._not_expr(), span=tok.span)
        return left

    def _not_expr(self) -> Expr:
        if self.at(KIND_KEYWORD, "not"):
            tok = self.advance()
            return Unary(op="not", operand=self._not_expr(), span=tok.span)
        return self._comparison()

    def _comparison(self) -> Expr:
        left = self._additive()
        while self.at(KIND_PUNCT) and self.peek().text in _COMPARISONS:
            tok = self.advance()
            op = _COMPARISONS[tok.text]
            left = Binary(op=op, left=left, right=self._additive(), span=tok.span)
        return left

    def _additive(self) -> Expr:
        left = self._multiplicative()
        while self.at(KIND_PUNCT) and self.peek().text in ("+", "-"):
            tok = self.advance()
            left = Binary(
                op=tok.text, left=left, right=self._multiplicative(), span=tok.span
            )
        return left

    def _multiplicative(self) -> Expr:
        left = self._unary()
        while self.at(KIND_PUNCT) and self.peek().text in ("*", "/"):
            tok = self.advance()
            left = Binary(op=tok.text, left=left, right=self._unary(), span=tok.span)
        return left

    def _unary(self) -> Expr:
        if self.at(KIND_PUNCT, "-"):
            tok = self.advance()
            # A minus directly before a number folds into a signed literal,
            # mirroring how the canonical printer renders negative numbers.
            if self.at(KIND_NUMBER):
                num = self.advance()
                return NumberLit(text="-" + num.text, span=tok.span)
            return Unary(op="negate", operand=self._unary(), span=tok.span)
        return self._primary()

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == KIND_NUMBER:
            self.advance()
            return NumberLit(text=tok.text, span=tok.span)
        if tok.kind == KIND_STRING:
            self.advance()
            return TextLit(value=tok.text, span=tok.span)
        if tok.kind == KIND_KEYWORD and tok.text in ("True", "False"):
            self.advance()
            return BoolLit(value=tok.text == "True", span=tok.span)
        if tok.kind == KIND_PUNCT and tok.text == "[":
            return self._list_literal()
        if tok.kind == KIND_PUNCT and tok.text == "{":
            return self._dict_literal()
        if tok.kind == KIND_KEYWORD and tok.text == "global":
            self.advance()
            name_tok = self.expect(KIND_IDENT, what="global name")
            return GlobalRef(name=name_tok.text, span=tok.span)
        if tok.kind == KIND_KEYWORD and tok.text == "call":
            self.advance()
            name_tok = self.expect(KIND_IDENT, what="procedure or component name")
            if self.accept(KIND_PUNCT, "."):
                method_tok = self.expect(KIND_IDENT, what="method name")
                return MethodCall(
                    component=name_tok.text,
                    method=method_tok.text,
                    args=self._call_args(),
                    span=tok.span,
                )
            return ProcCall(name=name_tok.text, args=self._call_args(), span=tok.span)
        if tok.kind == KIND_IDENT:
            self.advance()
            if self.at(KIND_PUNCT, "("):
                return BuiltinCall(name=tok.text, args=self._call_args(), span=tok.span)
            if self.at(KIND_PUNCT, ".") and self._next_is_ident(1):
                self.advance()
                prop_tok = self.advance()
                if self.at(KIND_PUNCT, "("):
                    self.fail(
                        f"method calls need the 'call' keyword: "
                        f"call {tok.text}.{prop_tok.text}(...)",
                        tok.span,
                    )
                return PropertyRead(
                    component=tok.text, property=prop_tok.text, span=tok.span
                )
            return LocalRef(name=tok.text, span=tok.span)
        if tok.kind == KIND_PUNCT and tok.text == "(":
            self.advance()
            inner = self._expr()
            self.expect(KIND_PUNCT, ")")
            return inner
        self.fail(f"expected an expression, found {self._describe(tok)}")
        raise AssertionError("unreachable")

    def _next_is_ident(self, offset: int) -> bool:
        return self.peek(offset).kind == KIND_IDENT

    def _call_args(self) -> tuple:
        self.expect(KIND_PUNCT, "(")
        args: list[Expr] = []
        if not self.at(KIND_PUNCT, ")"):
            while True:
                args.append(self._expr())
                if not self.accept(KIND_PUNCT, ","):
                    break
        self.expect(KIND_PUNCT, ")")
        return tuple(args)

    # -- literals ------------------------------------------------------------

    def _literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == KIND_PUNCT and tok.text == "-":
            self.advance()
            num = self.expect(KIND_NUMBER, what="a number")
            return NumberLit(text="-" + num.text, span=tok.span)
        if tok.kind == KIND_NUMBER:
            self.advance()
            return NumberLit(text=tok.text, span=tok.span)
        if tok.kind == KIND_STRING:
            self.advance()
            return TextLit(value=tok.text, span=tok.span)
        if tok.kind == KIND_KEYWORD and tok.text in ("True", "False"):
            self.advance()
            return BoolLit(value=tok.text == "True", span=tok.span)
        if tok.kind == KIND_PUNCT and tok.text == "[":
            return self._list_literal()
        if tok.kind == KIND_PUNCT and tok.text == "{":
            return self._dict_literal()
        self.fail(f"expected a literal value, found {self._describe(tok)}")
        raise AssertionError("unreachable")

    def _list_literal(self) -> ListLit:
        open_tok = self.expect(KIND_PUNCT, "[")
        items: list[Literal] = []
        if not self.at(KIND_PUNCT, "]"):
            while True:
                items.append(self._literal())
                if not self.accept(KIND_PUNCT, ","):
                    break
        self.expect(KIND_PUNCT, "]")
        return ListLit(items=tuple(items), span=open_tok.span)

    def _dict_literal(self) -> DictLit:
        open_tok = self.expect(KIND_PUNCT, "{")
        entries: list[tuple[str, Literal]] = []
        keys: set[str] = set()
        if not self.at(KIND_PUNCT, "}"):
            while True:
                key_tok = self.expect(KIND_STRING, what="a string key")
                if key_tok.text in keys:
                    self.fail(
                        f"duplicate dictionary key {key_tok.text!r}", key_tok.span
                    )
                keys.add(key_tok.text)
                self.expect(KIND_PUNCT, ":")
                entries.append((key_tok.text, self._literal()))
                if not self.accept(KIND_PUNCT, ","):
                    break
        self.expect(KIND_PUNCT, "}")
        return DictLit(entries=tuple(entries), span=open_tok.span)
