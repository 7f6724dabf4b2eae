"""Block-program model and the bidirectional transpiler.

A BlockProgram is the designer component tree plus a workspace block forest.
``compile_program`` and ``decompile_program`` are mutually inverse over
validated Programs, so text and blocks stay in one-to-one correspondence.

Opcode table (normative for this artifact)
------------------------------------------

Top level (the only opcodes allowed at workspace roots):

    global_declaration       fields NAME            inputs VALUE
    procedures_defnoreturn   fields NAME            mutation params   inputs STACK
    procedures_defreturn     fields NAME            mutation params   inputs [STACK,] RETURN
    component_event          mutation component_type, event_name,
                             instance_name, params  inputs DO

Statements (chain via ``next``):

    component_set_get        mutation set_or_get="set", component_type,
                             property_name, instance_name   inputs VALUE
    lexical_variable_set     fields VAR ("global <name>" for globals)  inputs VALUE
    procedures_callnoreturn  mutation proc_name     inputs ARG0..ARGn
    component_method         mutation component_type, method_name,
                             instance_name          inputs ARG0..ARGn
    controls_if              mutation elseif, else  inputs IF0,DO0,..[,ELSE]
    controls_forEach         fields VAR             inputs LIST, DO
    controls_while           inputs TEST, DO

Values:

    math_number              fields NUM (decimal source text)
    text                     fields TEXT
    logic_boolean            fields BOOL ("TRUE"/"FALSE")
    lists_create_with        mutation items         inputs ADD0..ADDn
    dictionaries_create_with mutation items         inputs ADD0..ADDn (pair blocks)
    pair                     inputs KEY (text), VALUE
    lexical_variable_get     fields VAR ("global <name>" for globals)
    component_set_get        mutation set_or_get="get", ...
    procedures_callreturn    mutation proc_name     inputs ARG0..ARGn
    component_method         (value position)       inputs ARG0..ARGn
    math_add | math_subtract | math_multiply | math_division   inputs A, B
    logic_compare            fields OP in EQ,NEQ,LT,LTE,GT,GTE inputs A, B
    logic_operation          fields OP in AND,OR    inputs A, B
    logic_negate             inputs BOOL
    math_neg                 inputs NUM
    <builtin name>           inputs ARG0..ARGn (arity from the registry)

``return`` has no block of its own: it is the RETURN socket of
procedures_defreturn. Where one opcode serves two AST shapes the pair is
disambiguated losslessly: the ``global `` VAR prefix, the set_or_get
mutation, and statement-versus-value position.

The designer tree stores nesting, not declaration order, so decompiling
yields component declarations in tree pre-order. The decompile/compile
bijection therefore holds on programs whose declarations are already in
pre-order (the layout designer exports and the canonical corpus use);
programs in any other topological order compile fine but canonicalize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import astnodes as ast
from .diagnostics import (
    BlocksJsonError,
    DecompileError,
    Diagnostic,
    E_BLOCKS_JSON_PARSE,
    E_BLOCKS_JSON_VERSION,
    E_MALFORMED_BLOCK,
    E_NOT_VALIDATED,
    E_ORPHAN_INSTANCE,
    E_UNKNOWN_OPCODE,
    ValidationFailure,
)
from .registry import Registry, validate

SCHEMA_VERSION = 1

TOP_LEVEL_OPCODES = frozenset(
    ("global_declaration", "procedures_defnoreturn", "procedures_defreturn", "component_event")
)

STATEMENT_OPCODES = frozenset(
    (
        "component_set_get", "lexical_variable_set", "procedures_callnoreturn",
        "component_method", "controls_if", "controls_forEach", "controls_while",
    )
)

VALUE_OPCODES = frozenset(
    (
        "math_number", "text", "logic_boolean", "lists_create_with",
        "dictionaries_create_with", "pair", "lexical_variable_get",
        "component_set_get", "procedures_callreturn", "component_method",
        "math_add", "math_subtract", "math_multiply", "math_division",
        "logic_compare", "logic_operation", "logic_negate", "math_neg",
    )
)

_ARITH_OPCODE = {"+": "math_add", "-": "math_subtract", "*": "math_multiply", "/": "math_division"}
_ARITH_OP = {v: k for k, v in _ARITH_OPCODE.items()}
_COMPARE_FIELD = {"=": "EQ", "!=": "NEQ", "<": "LT", "<=": "LTE", ">": "GT", ">=": "GTE"}
_COMPARE_OP = {v: k for k, v in _COMPARE_FIELD.items()}
_LOGIC_FIELD = {"and": "AND", "or": "OR"}
_LOGIC_OP = {v: k for k, v in _LOGIC_FIELD.items()}

GLOBAL_VAR_PREFIX = "global "


@dataclass(frozen=True)
class ComponentNode:
    name: str
    type_name: str
    properties: tuple = ()
    children: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "properties", tuple(tuple(p) for p in self.properties))
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Block:
    id: str
    opcode: str
    fields: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    mutation: dict = field(default_factory=dict)
    next: "Block | None" = None


@dataclass(frozen=True)
class BlockProgram:
    designer: ComponentNode
    workspace: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "workspace", tuple(self.workspace))


# -- compile: Program -> BlockProgram ----------------------------------------


class _IdGen:
    def __init__(self):
        self.n = 0

    def take(self) -> str:
        self.n += 1
        return f"b{self.n}"


def compile_program(program: ast.Program, registry: Registry) -> BlockProgram:
    """Transpile a validated Program; raises ValidationFailure otherwise."""
    diags = validate(program, registry)
    if diags:
        raise ValidationFailure(
            [Diagnostic(E_NOT_VALIDATED, "program failed validation")] + diags
        )
    comp_types = program.component_types()
    designer = _build_designer(program)
    ids = _IdGen()
    workspace: list[Block] = []
    for g in program.globals:
        bid = ids.take()
        workspace.append(
            Block(
                id=bid,
                opcode="global_declaration",
                fields={"NAME": g.name},
                inputs={"VALUE": _compile_expr(g.init, ids, comp_types)},
            )
        )
    for proc in program.procedures:
        workspace.append(_compile_procedure(proc, ids, comp_types))
    for handler in program.handlers:
        bid = ids.take()
        workspace.append(
            Block(
                id=bid,
                opcode="component_event",
                mutation={
                    "component_type": comp_types[handler.component],
                    "event_name": handler.event,
                    "instance_name": handler.component,
                    "params": ",".join(handler.params),
                },
                inputs={"DO": _compile_chain(handler.body, ids, comp_types)},
            )
        )
    return BlockProgram(designer=designer, workspace=tuple(workspace))


def _build_designer(program: ast.Program) -> ComponentNode:
    children: dict[str, list] = {c.name: [] for c in program.components}
    nodes: dict[str, ast.ComponentDecl] = {}
    root_name = None
    for comp in program.components:
        nodes[comp.name] = comp
        if comp.parent is None:
            root_name = comp.name
        else:
            children[comp.parent].append(comp.name)

    def build(name: str) -> ComponentNode:
        decl = nodes[name]
        return ComponentNode(
            name=decl.name,
            type_name=decl.type_name,
            properties=decl.properties,
            children=tuple(build(child) for child in children[name]),
        )

    return build(root_name)


def _compile_procedure(proc: ast.ProcedureDecl, ids: _IdGen, comp_types) -> Block:
    bid = ids.take()
    mutation = {"params": ",".join(proc.params)}
    if proc.has_result:
        stmts = proc.body[:-1]
        inputs = {}
        if stmts:
            inputs["STACK"] = _compile_chain(stmts, ids, comp_types)
        inputs["RETURN"] = _compile_expr(proc.body[-1].value, ids, comp_types)
        return Block(
            id=bid,
            opcode="procedures_defreturn",
            fields={"NAME": proc.name},
            mutation=mutation,
            inputs=inputs,
        )
    return Block(
        id=bid,
        opcode="procedures_defnoreturn",
        fields={"NAME": proc.name},
        mutation=mutation,
        inputs={"STACK": _compile_chain(proc.body, ids, comp_types)},
    )


def _compile_chain(stmts, ids: _IdGen, comp_types) -> Block:
    blocks = [_compile_stmt(stmt, ids, comp_types) for stmt in stmts]
    # Chain by rebuilding from the tail: Block is frozen.
    chained = blocks[-1]
    for blk in reversed(blocks[:-1]):
        chained = Block(
            id=blk.id,
            opcode=blk.opcode,
            fields=blk.fields,
            inputs=blk.inputs,
            mutation=blk.mutation,
            next=chained,
        )
    return chained


def _compile_stmt(stmt, ids: _IdGen, comp_types) -> Block:
    bid = ids.take()
    if isinstance(stmt, ast.SetProperty):
        return Block(
            id=bid,
            opcode="component_set_get",
            mutation={
                "set_or_get": "set",
                "component_type": comp_types[stmt.component],
                "property_name": stmt.property,
                "instance_name": stmt.component,
            },
            inputs={"VALUE": _compile_expr(stmt.value, ids, comp_types)},
        )
    if isinstance(stmt, ast.SetGlobal):
        return Block(
            id=bid,
            opcode="lexical_variable_set",
            fields={"VAR": GLOBAL_VAR_PREFIX + stmt.name},
            inputs={"VALUE": _compile_expr(stmt.value, ids, comp_types)},
        )
    if isinstance(stmt, ast.SetLocal):
        return Block(
            id=bid,
            opcode="lexical_variable_set",
            fields={"VAR": stmt.name},
            inputs={"VALUE": _compile_expr(stmt.value, ids, comp_types)},
        )
    if isinstance(stmt, ast.CallProcedure):
        return Block(
            id=bid,
            opcode="procedures_callnoreturn",
            mutation={"proc_name": stmt.name},
            inputs=_compile_args(stmt.args, ids, comp_types),
        )
    if isinstance(stmt, ast.CallMethod):
        return Block(
            id=bid,
            opcode="component_method",
            mutation={
                "component_type": comp_types[stmt.component],
                "method_name": stmt.method,
                "instance_name": stmt.component,
            },
            inputs=_compile_args(stmt.args, ids, comp_types),
        )
    if isinstance(stmt, ast.If):
        inputs = {"IF0": _compile_expr(stmt.cond, ids, comp_types)}
        inputs["DO0"] = _compile_chain(stmt.then_body, ids, comp_types)
        for i, (cond, body) in enumerate(stmt.elifs, start=1):
            inputs[f"IF{i}"] = _compile_expr(cond, ids, comp_types)
            inputs[f"DO{i}"] = _compile_chain(body, ids, comp_types)
        if stmt.else_body is not None:
            inputs["ELSE"] = _compile_chain(stmt.else_body, ids, comp_types)
        return Block(
            id=bid,
            opcode="controls_if",
            mutation={
                "elseif": str(len(stmt.elifs)),
                "else": "1" if stmt.else_body is not None else "0",
            },
            inputs=inputs,
        )
    if isinstance(stmt, ast.ForEach):
        return Block(
            id=bid,
            opcode="controls_forEach",
            fields={"VAR": stmt.var},
            inputs={
                "LIST": _compile_expr(stmt.items, ids, comp_types),
                "DO": _compile_chain(stmt.body, ids, comp_types),
            },
        )
    if isinstance(stmt, ast.While):
        return Block(
            id=bid,
            opcode="controls_while",
            inputs={
                "TEST": _compile_expr(stmt.cond, ids, comp_types),
                "DO": _compile_chain(stmt.body, ids, comp_types),
            },
        )
    raise TypeError(f"statement {stmt!r} has no block form")


def _compile_args(args, ids: _IdGen, comp_types) -> dict:
    return {f"ARG{i}": _compile_expr(a, ids, comp_types) for i, a in enumerate(args)}


def _compile_expr(expr, ids: _IdGen, comp_types) -> Block:
    bid = ids.take()
    if isinstance(expr, ast.NumberLit):
        return Block(id=bid, opcode="math_number", fields={"NUM": expr.text})
    if isinstance(expr, ast.TextLit):
        return Block(id=bid, opcode="text", fields={"TEXT": expr.value})
    if isinstance(expr, ast.BoolLit):
        return Block(
            id=bid, opcode="logic_boolean", fields={"BOOL": "TRUE" if expr.value else "FALSE"}
        )
    if isinstance(expr, ast.ListLit):
        return Block(
            id=bid,
            opcode="lists_create_with",
            mutation={"items": str(len(expr.items))},
            inputs={
                f"ADD{i}": _compile_expr(item, ids, comp_types)
                for i, item in enumerate(expr.items)
            },
        )
    if isinstance(expr, ast.DictLit):
        inputs = {}
        for i, (key, value) in enumerate(expr.entries):
            pair_id = ids.take()
            key_block = Block(id=ids.take(), opcode="text", fields={"TEXT": key})
            inputs[f"ADD{i}"] = Block(
                id=pair_id,
                opcode="pair",
                inputs={"KEY": key_block, "VALUE": _compile_expr(value, ids, comp_types)},
            )
        return Block(
            id=bid,
            opcode="dictionaries_create_with",
            mutation={"items": str(len(expr.entries))},
            inputs=inputs,
        )
    if isinstance(expr, ast.GlobalRef):
        return Block(
            id=bid, opcode="lexical_variable_get", fields={"VAR": GLOBAL_VAR_PREFIX + expr.name}
        )
    if isinstance(expr, ast.LocalRef):
        return Block(id=bid, opcode="lexical_variable_get", fields={"VAR": expr.name})
    if isinstance(expr, ast.PropertyRead):
        return Block(
            id=bid,
            opcode="component_set_get",
            mutation={
                "set_or_get": "get",
                "component_type": comp_types[expr.component],
                "property_name": expr.property,
                "instance_name": expr.component,
            },
        )
    if isinstance(expr, ast.ProcCall):
        return Block(
            id=bid,
            opcode="procedures_callreturn",
            mutation={"proc_name": expr.name},
            inputs=_compile_args(expr.args, ids, comp_types),
        )
    if isinstance(expr, ast.MethodCall):
        return Block(
            id=bid,
            opcode="component_method",
            mutation={
                "component_type": comp_types[expr.component],
                "method_name": expr.method,
                "instance_name": expr.component,
            },
            inputs=_compile_args(expr.args, ids, comp_types),
        )
    if isinstance(expr, ast.BuiltinCall):
        return Block(
            id=bid, opcode=expr.name, inputs=_compile_args(expr.args, ids, comp_types)
        )
    if isinstance(expr, ast.Binary):
        a = _compile_expr(expr.left, ids, comp_types)
        b = _compile_expr(expr.right, ids, comp_types)
        if expr.op in _ARITH_OPCODE:
            return Block(id=bid, opcode=_ARITH_OPCODE[expr.op], inputs={"A": a, "B": b})
        if expr.op in _COMPARE_FIELD:
            return Block(
                id=bid,
                opcode="logic_compare",
                fields={"OP": _COMPARE_FIELD[expr.op]},
                inputs={"A": a, "B": b},
            )
        return Block(
            id=bid,
            opcode="logic_operation",
            fields={"OP": _LOGIC_FIELD[expr.op]},
            inputs={"A": a, "B": b},
        )
    if isinstance(expr, ast.Unary):
        operand = _compile_expr(expr.operand, ids, comp_types)
        if expr.op == "not":
            return Block(id=bid, opcode="logic_negate", inputs={"BOOL": operand})
        return Block(id=bid, opcode="math_neg", inputs={"NUM": operand})
    raise TypeError(f"expression {expr!r} has no block form")


# -- decompile: BlockProgram -> Program ---------------------------------------


def decompile_program(blocks: BlockProgram, registry: Registry) -> ast.Program:
    """Invert compile_program; raises DecompileError with diagnostics."""
    d = _Decompiler(blocks, registry)
    return d.run()


class _Decompiler:
    def __init__(self, blocks: BlockProgram, registry: Registry):
        self.blocks = blocks
        self.registry = registry

    def fail(self, code: str, message: str):
        raise DecompileError([Diagnostic(code, message)])

    def run(self) -> ast.Program:
        if self.blocks.designer.type_name != ast.SCREEN_TYPE:
            self.fail(E_MALFORMED_BLOCK, "designer root must be a Screen")
        components: list[ast.ComponentDecl] = []
        instances: set[str] = set()
        self._walk_designer(self.blocks.designer, None, components, instances)

        globals_: list[ast.GlobalDecl] = []
        procedures: list[ast.ProcedureDecl] = []
        handlers: list[ast.EventHandler] = []
        for block in self.blocks.workspace:
            if block.opcode == "global_declaration":
                globals_.append(self._global_decl(block))
            elif block.opcode in ("procedures_defnoreturn", "procedures_defreturn"):
                procedures.append(self._procedure(block))
            elif block.opcode == "component_event":
                handlers.append(self._handler(block, instances))
            elif block.opcode in STATEMENT_OPCODES | VALUE_OPCODES or block.opcode in self.registry.builtins:
                self.fail(
                    E_MALFORMED_BLOCK,
                    f"opcode {block.opcode!r} is not allowed at the top level",
                )
            else:
                self.fail(E_UNKNOWN_OPCODE, f"unknown opcode {block.opcode!r}")
        program = ast.Program(
            components=tuple(components),
            globals=tuple(globals_),
            procedures=tuple(procedures),
            handlers=tuple(handlers),
        )
        invariants = ast.program_invariant_errors(program)
        if invariants:
            raise DecompileError(invariants)
        return program

    def _walk_designer(self, node: ComponentNode, parent, out, instances) -> None:
        if node.name in instances:
            self.fail(E_MALFORMED_BLOCK, f"duplicate component name {node.name!r}")
        instances.add(node.name)
        properties = []
        for prop in node.properties:
            if len(prop) != 2 or not isinstance(prop[0], str) or not isinstance(prop[1], ast.Literal):
                self.fail(E_MALFORMED_BLOCK, f"bad property entry on {node.name!r}")
            properties.append((prop[0], prop[1]))
        out.append(
            ast.ComponentDecl(
                name=node.name,
                type_name=node.type_name,
                parent=parent,
                properties=tuple(properties),
            )
        )
        for child in node.children:
            self._walk_designer(child, node.name, out, instances)

    def _require_input(self, block: Block, name: str) -> Block:
        got = block.inputs.get(name)
        if got is None:
            self.fail(
                E_MALFORMED_BLOCK, f"{block.opcode} block {block.id} lacks input {name}"
            )
        return got

    def _require_field(self, block: Block, name: str) -> str:
        got = block.fields.get(name)
        if got is None:
            self.fail(
                E_MALFORMED_BLOCK, f"{block.opcode} block {block.id} lacks field {name}"
            )
        return got

    def _require_mutation(self, block: Block, name: str) -> str:
        got = block.mutation.get(name)
        if got is None:
            self.fail(
                E_MALFORMED_BLOCK,
                f"{block.opcode} block {block.id} lacks mutation {name}",
            )
        return got

    @staticmethod
    def _split_params(raw: str) -> tuple:
        return tuple(raw.split(",")) if raw else ()

    def _global_decl(self, block: Block) -> ast.GlobalDecl:
        return ast.GlobalDecl(
            name=self._require_field(block, "NAME"),
            init=self._expr(self._require_input(block, "VALUE")),
        )

    def _procedure(self, block: Block) -> ast.ProcedureDecl:
        name = self._require_field(block, "NAME")
        params = self._split_params(self._require_mutation(block, "params"))
        if block.opcode == "procedures_defreturn":
            body: list = []
            if "STACK" in block.inputs:
                body += self._chain(block.inputs["STACK"])
            body.append(ast.Return(value=self._expr(self._require_input(block, "RETURN"))))
            return ast.ProcedureDecl(name=name, params=params, body=tuple(body))
        body = self._chain(self._require_input(block, "STACK"))
        return ast.ProcedureDecl(name=name, params=params, body=tuple(body))

    def _handler(self, block: Block, instances) -> ast.EventHandler:
        instance = self._require_mutation(block, "instance_name")
        event = self._require_mutation(block, "event_name")
        self._require_mutation(block, "component_type")
        if instance not in instances:
            raise DecompileError(
                [
                    Diagnostic(
                        E_ORPHAN_INSTANCE,
                        f"workspace references component {instance!r} missing from the designer",
                    )
                ]
            )
        params = self._split_params(self._require_mutation(block, "params"))
        return ast.EventHandler(
            component=instance,
            event=event,
            params=params,
            body=tuple(self._chain(self._require_input(block, "DO"))),
        )

    def _chain(self, block: Block) -> list:
        stmts = []
        current: Block | None = block
        while current is not None:
            stmts.append(self._stmt(current))
            current = current.next
        return stmts

    def _args(self, block: Block) -> tuple:
        args = []
        for i in range(len(block.inputs)):
            name = f"ARG{i}"
            if name not in block.inputs:
                self.fail(
                    E_MALFORMED_BLOCK,
                    f"{block.opcode} block {block.id} has non-contiguous arguments",
                )
            args.append(self._expr(block.inputs[name]))
        return tuple(args)

    def _stmt(self, block: Block):
        op = block.opcode
        if op == "component_set_get":
            if self._require_mutation(block, "set_or_get") != "set":
                self.fail(
                    E_MALFORMED_BLOCK,
                    f"component_set_get block {block.id}: getter used as a statement",
                )
            return ast.SetProperty(
                component=self._require_mutation(block, "instance_name"),
                property=self._require_mutation(block, "property_name"),
                value=self._expr(self._require_input(block, "VALUE")),
            )
        if op == "lexical_variable_set":
            var = self._require_field(block, "VAR")
            value = self._expr(self._require_input(block, "VALUE"))
            if var.startswith(GLOBAL_VAR_PREFIX):
                return ast.SetGlobal(name=var[len(GLOBAL_VAR_PREFIX):], value=value)
            return ast.SetLocal(name=var, value=value)
        if op == "procedures_callnoreturn":
            return ast.CallProcedure(
                name=self._require_mutation(block, "proc_name"), args=self._args(block)
            )
        if op == "component_method":
            return ast.CallMethod(
                component=self._require_mutation(block, "instance_name"),
                method=self._require_mutation(block, "method_name"),
                args=self._args(block),
            )
        if op == "controls_if":
            return self._if_stmt(block)
        if op == "controls_forEach":
            return ast.ForEach(
                var=self._require_field(block, "VAR"),
                items=self._expr(self._require_input(block, "LIST")),
                body=tuple(self._chain(self._require_input(block, "DO"))),
            )
        if op == "controls_while":
            return ast.While(
                cond=self._expr(self._require_input(block, "TEST")),
                body=tuple(self._chain(self._require_input(block, "DO"))),
            )
        if op in VALUE_OPCODES or op in self.registry.builtins:
            self.fail(
                E_MALFORMED_BLOCK, f"value opcode {op!r} used in statement position"
            )
        if op in TOP_LEVEL_OPCODES:
            self.fail(E_MALFORMED_BLOCK, f"top-level opcode {op!r} nested in a body")
        self.fail(E_UNKNOWN_OPCODE, f"unknown opcode {op!r}")

    def _if_stmt(self, block: Block) -> ast.If:
        try:
            elseif_count = int(self._require_mutation(block, "elseif"))
            has_else = self._require_mutation(block, "else") == "1"
        except ValueError:
            self.fail(E_MALFORMED_BLOCK, f"controls_if block {block.id} has a bad mutation")
        cond = self._expr(self._require_input(block, "IF0"))
        then_body = tuple(self._chain(self._require_input(block, "DO0")))
        elifs = []
        for i in range(1, elseif_count + 1):
            elifs.append(
                (
                    self._expr(self._require_input(block, f"IF{i}")),
                    tuple(self._chain(self._require_input(block, f"DO{i}"))),
                )
            )
        else_body = None
        if has_else:
            else_body = tuple(self._chain(self._require_input(block, "ELSE")))
        return ast.If(cond=cond, then_body=then_body, elifs=tuple(elifs), else_body=else_body)

    def _expr(self, block: Block):
        if block.next is not None:
            self.fail(
                E_MALFORMED_BLOCK,
                f"value block {block.id} ({block.opcode}) must not chain via next",
            )
        op = block.opcode
        if op == "math_number":
            return ast.NumberLit(text=self._require_field(block, "NUM"))
        if op == "text":
            return ast.TextLit(value=self._require_field(block, "TEXT"))
        if op == "logic_boolean":
            raw = self._require_field(block, "BOOL")
            if raw not in ("TRUE", "FALSE"):
                self.fail(E_MALFORMED_BLOCK, f"logic_boolean block {block.id} has BOOL={raw!r}")
            return ast.BoolLit(value=raw == "TRUE")
        if op == "lists_create_with":
            return ast.ListLit(items=self._collection_items(block, self._literal))
        if op == "dictionaries_create_with":
            entries = []
            for item in self._collection_items(block, self._pair):
                entries.append(item)
            try:
                return ast.DictLit(entries=tuple(entries))
            except ValueError as exc:
                self.fail(E_MALFORMED_BLOCK, f"dictionary block {block.id}: {exc}")
        if op == "lexical_variable_get":
            var = self._require_field(block, "VAR")
            if var.startswith(GLOBAL_VAR_PREFIX):
                return ast.GlobalRef(name=var[len(GLOBAL_VAR_PREFIX):])
            return ast.LocalRef(name=var)
        if op == "component_set_get":
            if self._require_mutation(block, "set_or_get") != "get":
                self.fail(
                    E_MALFORMED_BLOCK,
                    f"component_set_get block {block.id}: setter used as a value",
                )
            return ast.PropertyRead(
                component=self._require_mutation(block, "instance_name"),
                property=self._require_mutation(block, "property_name"),
            )
        if op == "procedures_callreturn":
            return ast.ProcCall(
                name=self._require_mutation(block, "proc_name"), args=self._args(block)
            )
        if op == "component_method":
            return ast.MethodCall(
                component=self._require_mutation(block, "instance_name"),
                method=self._require_mutation(block, "method_name"),
                args=self._args(block),
            )
        if op in _ARITH_OP:
            return ast.Binary(
                op=_ARITH_OP[op],
                left=self._expr(self._require_input(block, "A")),
                right=self._expr(self._require_input(block, "B")),
            )
        if op == "logic_compare":
            raw = self._require_field(block, "OP")
            if raw not in _COMPARE_OP:
                self.fail(E_MALFORMED_BLOCK, f"logic_compare block {block.id} has OP={raw!r}")
            return ast.Binary(
                op=_COMPARE_OP[raw],
                left=self._expr(self._require_input(block, "A")),
                right=self._expr(self._require_input(block, "B")),
            )
        if op == "logic_operation":
            raw = self._require_field(block, "OP")
            if raw not in _LOGIC_OP:
                self.fail(E_MALFORMED_BLOCK, f"logic_operation block {block.id} has OP={raw!r}")
            return ast.Binary(
                op=_LOGIC_OP[raw],
                left=self._expr(self._require_input(block, "A")),
                right=self._expr(self._require_input(block, "B")),
            )
        if op == "logic_negate":
            return ast.Unary(op="not", operand=self._expr(self._require_input(block, "BOOL")))
        if op == "math_neg":
            return ast.Unary(op="negate", operand=self._expr(self._require_input(block, "NUM")))
        if op in self.registry.builtins:
            return ast.BuiltinCall(name=op, args=self._args(block))
        if op == "pair":
            self.fail(E_MALFORMED_BLOCK, "pair blocks only belong to dictionaries")
        if op in STATEMENT_OPCODES or op in TOP_LEVEL_OPCODES:
            self.fail(E_MALFORMED_BLOCK, f"opcode {op!r} used in value position")
        self.fail(E_UNKNOWN_OPCODE, f"unknown opcode {op!r}")

    def _collection_items(self, block: Block, parse_item) -> tuple:
        try:
            count = int(self._require_mutation(block, "items"))
        except ValueError:
            self.fail(E_MALFORMED_BLOCK, f"{block.opcode} block {block.id} has a bad items count")
        items = []
        for i in range(count):
            items.append(parse_item(self._require_input(block, f"ADD{i}")))
        return tuple(items)

    def _literal(self, block: Block) -> ast.Literal:
        value = self._expr(block)
        if not isinstance(value, ast.Literal):
            self.fail(
                E_MALFORMED_BLOCK,
                f"block {block.id} ({block.opcode}) is not a literal; collection "
                "literals may only hold literals",
            )
        return value

    def _pair(self, block: Block) -> tuple:
        if block.opcode != "pair":
            self.fail(E_MALFORMED_BLOCK, f"dictionary item {block.id} must be a pair block")
        key_block = self._require_input(block, "KEY")
        if key_block.opcode != "text":
            self.fail(E_MALFORMED_BLOCK, f"pair block {block.id} key must be a text block")
        key = self._require_field(key_block, "TEXT")
        return (key, self._literal(self._require_input(block, "VALUE")))


# -- serialization -------------------------------------------------------------


def _literal_to_obj(lit: ast.Literal):
    if isinstance(lit, ast.NumberLit):
        return {"kind": "number", "value": lit.text}
    if isinstance(lit, ast.TextLit):
        return {"kind": "text", "value": lit.value}
    if isinstance(lit, ast.BoolLit):
        return {"kind": "boolean", "value": lit.value}
    if isinstance(lit, ast.ListLit):
        return {"kind": "list", "items": [_literal_to_obj(i) for i in lit.items]}
    if isinstance(lit, ast.DictLit):
        return {
            "kind": "dict",
            "entries": [[k, _literal_to_obj(v)] for k, v in lit.entries],
        }
    raise TypeError(f"not a literal: {lit!r}")


def _node_to_obj(node: ComponentNode) -> dict:
    obj: dict = {"name": node.name, "type": node.type_name}
    if node.properties:
        obj["properties"] = [[name, _literal_to_obj(v)] for name, v in node.properties]
    if node.children:
        obj["children"] = [_node_to_obj(c) for c in node.children]
    return obj


def _block_to_obj(block: Block) -> dict:
    obj: dict = {"id": block.id, "opcode": block.opcode}
    if block.fields:
        obj["fields"] = dict(block.fields)
    if block.inputs:
        obj["inputs"] = {name: _block_to_obj(b) for name, b in block.inputs.items()}
    if block.mutation:
        obj["mutation"] = dict(block.mutation)
    if block.next is not None:
        obj["next"] = _block_to_obj(block.next)
    return obj


def blocks_to_json(blocks: BlockProgram) -> str:
    """Serialize to the canonical block-program document (sorted keys)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "designer": _node_to_obj(blocks.designer),
        "workspace": [_block_to_obj(b) for b in blocks.workspace],
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _json_fail(message: str):
    raise BlocksJsonError([Diagnostic(E_BLOCKS_JSON_PARSE, message)])


def blocks_from_json(text: str) -> BlockProgram:
    """Parse a block-program document; raises BlocksJsonError."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        _json_fail(f"not valid JSON: {exc}")
    return blocks_from_obj(doc)


def blocks_from_obj(doc) -> BlockProgram:
    """Build a BlockProgram from an already-decoded JSON object."""
    if not isinstance(doc, dict):
        _json_fail("document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise BlocksJsonError(
            [
                Diagnostic(
                    E_BLOCKS_JSON_VERSION,
                    f"unsupported schema_version {doc.get('schema_version')!r}; "
                    f"expected {SCHEMA_VERSION}",
                )
            ]
        )
    unknown = set(doc) - {"schema_version", "designer", "workspace"}
    if unknown:
        _json_fail(f"unknown document keys: {sorted(unknown)}")
    if "designer" not in doc or "workspace" not in doc:
        _json_fail("document needs designer and workspace")
    designer = _node_from_obj(doc["designer"])
    workspace_doc = doc["workspace"]
    if not isinstance(workspace_doc, list):
        _json_fail("'workspace' must be an array")
    seen_ids: set[str] = set()
    workspace = tuple(_block_from_obj(b, seen_ids) for b in workspace_doc)
    return BlockProgram(designer=designer, workspace=workspace)


def _literal_from_obj(obj) -> ast.Literal:
    if not isinstance(obj, dict) or "kind" not in obj:
        _json_fail("literal entries need a 'kind'")
    kind = obj["kind"]
    if kind == "number":
        if not isinstance(obj.get("value"), str):
            _json_fail("number literals carry their source text as a string")
        return ast.NumberLit(text=obj["value"])
    if kind == "text":
        if not isinstance(obj.get("value"), str):
            _json_fail("text literal value must be a string")
        return ast.TextLit(value=obj["value"])
    if kind == "boolean":
        if not isinstance(obj.get("value"), bool):
            _json_fail("boolean literal value must be a boolean")
        return ast.BoolLit(value=obj["value"])
    if kind == "list":
        items = obj.get("items")
        if not isinstance(items, list):
            _json_fail("list literal needs an items array")
        return ast.ListLit(items=tuple(_literal_from_obj(i) for i in items))
    if kind == "dict":
        entries = obj.get("entries")
        if not isinstance(entries, list):
            _json_fail("dict literal needs an entries array")
        out = []
        for entry in entries:
            if not isinstance(entry, list) or len(entry) != 2 or not isinstance(entry[0], str):
                _json_fail("dict entries are [key, literal] pairs")
            out.append((entry[0], _literal_from_obj(entry[1])))
        try:
            return ast.DictLit(entries=tuple(out))
        except ValueError as exc:
            _json_fail(str(exc))
    _json_fail(f"unknown literal kind {kind!r}")
    raise AssertionError("unreachable")


def _node_from_obj(obj) -> ComponentNode:
    if not isinstance(obj, dict):
        _json_fail("designer nodes must be objects")
    unknown = set(obj) - {"name", "type", "properties", "children"}
    if unknown:
        _json_fail(f"unknown designer keys: {sorted(unknown)}")
    if not isinstance(obj.get("name"), str) or not isinstance(obj.get("type"), str):
        _json_fail("designer nodes need string name and type")
    properties = []
    for entry in obj.get("properties", []):
        if not isinstance(entry, list) or len(entry) != 2 or not isinstance(entry[0], str):
            _json_fail("designer properties are [name, literal] pairs")
        properties.append((entry[0], _literal_from_obj(entry[1])))
    children = obj.get("children", [])
    if not isinstance(children, list):
        _json_fail("'children' must be an array")
    return ComponentNode(
        name=obj["name"],
        type_name=obj["type"],
        properties=tuple(properties),
        children=tuple(_node_from_obj(c) for c in children),
    )


def _block_from_obj(obj, seen_ids: set) -> Block:
    if not isinstance(obj, dict):
        _json_fail("blocks must be objects")
    unknown = set(obj) - {"id", "opcode", "fields", "inputs", "mutation", "next"}
    if unknown:
        _json_fail(f"unknown block keys: {sorted(unknown)}")
    block_id = obj.get("id")
    opcode = obj.get("opcode")
    if not isinstance(block_id, str) or not isinstance(opcode, str):
        _json_fail("blocks need string id and opcode")
    if block_id in seen_ids:
        _json_fail(f"duplicate block id {block_id!r}")
    seen_ids.add(block_id)

    fields = obj.get("fields", {})
    mutation = obj.get("mutation", {})
    for name, mapping in (("fields", fields), ("mutation", mutation)):
        if not isinstance(mapping, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in mapping.items()
        ):
            _json_fail(f"'{name}' must map strings to strings")
    inputs_doc = obj.get("inputs", {})
    if not isinstance(inputs_doc, dict):
        _json_fail("'inputs' must be an object")
    inputs = {
        name: _block_from_obj(child, seen_ids) for name, child in inputs_doc.items()
    }
    next_block = None
    if obj.get("next") is not None:
        next_block = _block_from_obj(obj["next"], seen_ids)
    return Block(
        id=block_id,
        opcode=opcode,
        fields=dict(fields),
        inputs=inputs,
        mutation=dict(mutation),
        next=next_block,
    )
