"""AST node definitions for the contract language.

Nodes are frozen dataclasses. Source positions are carried in ``pos`` but
excluded from equality, so two parses of equivalent text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Pos = tuple[int, int]
_NOPOS: Pos = (0, 0)


def _pos() -> Pos:
    return field(default=_NOPOS, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

SCALARS = ("uint256", "bool", "address")


@dataclass(frozen=True)
class ScalarType:
    name: str  # one of SCALARS

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ArrayType:
    elem: ScalarType

    def __str__(self) -> str:
        return f"{self.elem}[]"


@dataclass(frozen=True)
class MapType:
    key: ScalarType
    value: Union[ScalarType, "MapType"]

    def __str__(self) -> str:
        return f"mapping({self.key} => {self.value})"


TypeTag = Union[ScalarType, ArrayType, MapType]

UINT = ScalarType("uint256")
BOOL = ScalarType("bool")
ADDRESS = ScalarType("address")


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    hex: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()


@dataclass(frozen=True)
class Name:
    id: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    index: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Length:
    base: "Expr"
    pos: Pos = _pos()


# kinds: msg.sender, msg.value, now, block.number, balance
ENV_KINDS = ("msg.sender", "msg.value", "now", "block.number", "balance")


@dataclass(frozen=True)
class Env:
    kind: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


@dataclass(frozen=True)
class OracleCall:
    args: tuple["Expr", ...]
    pos: Pos = _pos()


Expr = Union[IntLit, BoolLit, Name, Index, Length, Env, Unary, Binary, OracleCall]


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class VarDecl:
    type: ScalarType
    name: str
    init: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Assign:
    target: Expr
    op: str  # '=', '+=', '-=', '*=', '/=', '%=', '++', '--'
    value: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Require:
    cond: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Throw:
    pos: Pos = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Optional[Block]
    pos: Pos = _pos()


@dataclass(frozen=True)
class For:
    var: str
    start: Expr
    stop: Expr
    body: Block
    pos: Pos = _pos()


@dataclass(frozen=True)
class Send:
    to: Expr
    amount: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Push:
    target: Expr
    value: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]
    pos: Pos = _pos()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr  # only OracleCall is accepted by the checker
    pos: Pos = _pos()


Stmt = Union[VarDecl, Assign, Require, Throw, If, For, Send, Push, Return, ExprStmt, Block]


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    type: ScalarType
    pos: Pos = _pos()


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: TypeTag
    init: Optional[Expr] = None
    pos: Pos = _pos()


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[Param, ...]
    payable: bool
    body: Block
    returns: Optional[ScalarType] = None
    pos: Pos = _pos()

    @property
    def param_types(self) -> tuple[ScalarType, ...]:
        return tuple(p.type for p in self.params)


@dataclass(frozen=True)
class ContractDef:
    name: str
    fields: tuple[FieldDecl, ...]
    functions: tuple[FunctionDef, ...]
    pos: Pos = _pos()

    def function(self, name: str) -> FunctionDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def field_decl(self, name: str) -> FieldDecl:
        for fd in self.fields:
            if fd.name == name:
                return fd
        raise KeyError(name)

    @property
    def field_names(self) -> frozenset[str]:
        return frozenset(fd.name for fd in self.fields)

    @property
    def has_callback(self) -> bool:
        return any(f.name == CALLBACK for f in self.functions)


CALLBACK = "__callback"
FALLBACK = "fallback"


def children(node) -> tuple:
    """Direct sub-nodes of an expression or statement, in source order."""
    if isinstance(node, (IntLit, BoolLit, Name, Env, Throw)):
        return ()
    if isinstance(node, Index):
        return (node.base, node.index)
    if isinstance(node, Length):
        return (node.base,)
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, Binary):
        return (node.left, node.right)
    if isinstance(node, OracleCall):
        return node.args
    if isinstance(node, Block):
        return node.stmts
    if isinstance(node, VarDecl):
        return (node.init,) if node.init is not None else ()
    if isinstance(node, Assign):
        return (node.target,) + ((node.value,) if node.value is not None else ())
    if isinstance(node, Require):
        return (node.cond,)
    if isinstance(node, If):
        return (node.cond, node.then) + ((node.orelse,) if node.orelse is not None else ())
    if isinstance(node, For):
        return (node.start, node.stop, node.body)
    if isinstance(node, Send):
        return (node.to, node.amount)
    if isinstance(node, Push):
        return (node.target, node.value)
    if isinstance(node, Return):
        return (node.value,) if node.value is not None else ()
    if isinstance(node, ExprStmt):
        return (node.expr,)
    raise TypeError(f"not an AST node: {node!r}")


def walk(node):
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))
