"""Front end for the ``.fsol`` contract language: parse, check, print."""

from __future__ import annotations

from collections import defaultdict

from . import ast
from .ast import (
    ADDRESS,
    BOOL,
    CALLBACK,
    FALLBACK,
    UINT,
    ArrayType,
    ContractDef,
    FieldDecl,
    FunctionDef,
    MapType,
    ScalarType,
)
from .checker import check, literal_types
from .errors import ContractSyntaxError, DuplicateName, ParseError, TypeMismatch, UnknownIdentifier
from .parser import parse_syntax
from .printer import format_contract, format_expr

UINT_MAX = 2**256 - 1

__all__ = [
    "ADDRESS", "BOOL", "CALLBACK", "FALLBACK", "UINT", "ArrayType", "ContractDef",
    "ContractSyntaxError", "DuplicateName", "FieldDecl", "FunctionDef", "MapType",
    "ParseError", "ScalarType", "TypeMismatch", "UnknownIdentifier", "ast",
    "format_contract", "format_expr", "harvest_constants", "list_functions", "parse",
]


def parse(source: str) -> ContractDef:
    """Parse and check a contract. Raises a :class:`ParseError` subclass on failure."""
    contract = parse_syntax(source)
    check(contract)
    return contract


def list_functions(c: ContractDef) -> list[tuple[str, tuple[str, ...], bool]]:
    """``(name, param type names, payable)`` in declaration order."""
    return [(f.name, tuple(t.name for t in f.param_types), f.payable) for f in c.functions]


def harvest_constants(c: ContractDef) -> dict[str, set]:
    """Literal values in the contract, grouped by scalar type name.

    Integer constants are widened by one step: the base set {0, 1} plus
    every literal and its two neighbours (clipped to the uint256 range).
    """
    typed: dict[int, ScalarType] = {}
    for node, t in literal_types(c):
        typed[id(node)] = t
    out: dict[str, set] = defaultdict(set)
    out["uint256"].update({0, 1})
    roots = [fd.init for fd in c.fields if fd.init is not None] + [f.body for f in c.functions]
    for root in roots:
        for node in ast.walk(root):
            if isinstance(node, ast.BoolLit):
                out["bool"].add(node.value)
            elif isinstance(node, ast.IntLit):
                t = typed.get(id(node), UINT)
                if t == ADDRESS:
                    out["address"].add(node.value)
                else:
                    v = node.value
                    out["uint256"].update(x for x in (v - 1, v, v + 1) if 0 <= x <= UINT_MAX)
    return dict(out)
