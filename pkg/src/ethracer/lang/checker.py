"""Name resolution and type checking over a parsed contract."""

from __future__ import annotations

from typing import Callable, Optional

from . import ast as A
from .errors import DuplicateName, TypeMismatch, UnknownIdentifier

# type of an integer literal before context fixes it to uint256 or address
LIT = A.ScalarType("<int-literal>")

_ARITH = {"+", "-", "*", "/", "%"}
_ORDER = {"<", "<=", ">", ">="}
_EQ = {"==", "!="}
_LOGIC = {"&&", "||"}


def _where(node) -> tuple[int, int]:
    return getattr(node, "pos", (0, 0))


class Checker:
    def __init__(self, contract: A.ContractDef, on_literal: Optional[Callable] = None):
        self.contract = contract
        self.fields: dict[str, A.TypeTag] = {}
        self.on_literal = on_literal or (lambda node, t: None)
        self.scopes: list[dict[str, A.ScalarType]] = []

    # -- entry -------------------------------------------------------------

    def check(self) -> None:
        c = self.contract
        for fd in c.fields:
            if fd.name in self.fields:
                raise DuplicateName(f"duplicate field {fd.name!r}", *_where(fd))
            self.fields[fd.name] = fd.type
            if fd.init is not None:
                if not isinstance(fd.type, A.ScalarType):
                    raise TypeMismatch(f"field {fd.name!r} of type {fd.type} cannot have an initializer", *_where(fd))
                self.coerce(fd.init, self.expr(fd.init), fd.type)
        seen: set[str] = set()
        for f in c.functions:
            if f.name in seen:
                raise DuplicateName(f"duplicate function {f.name!r}", *_where(f))
            if f.name in self.fields:
                raise DuplicateName(f"function {f.name!r} clashes with a field", *_where(f))
            seen.add(f.name)
            self.function(f)

    def function(self, f: A.FunctionDef) -> None:
        if f.name == A.CALLBACK:
            if not f.params or f.params[0].type != A.UINT:
                raise TypeMismatch("__callback must take the query id (uint256) as first parameter", *_where(f))
            if f.payable:
                raise TypeMismatch("__callback cannot be payable", *_where(f))
        self.scopes = [{}]
        for p in f.params:
            self.declare(p.name, p.type, p)
        self.block(f.body, new_scope=False)
        self.scopes = []

    # -- scopes ------------------------------------------------------------

    def declare(self, name: str, t: A.ScalarType, node) -> None:
        if name in self.fields:
            raise DuplicateName(f"{name!r} shadows a field", *_where(node))
        for scope in self.scopes:
            if name in scope:
                raise DuplicateName(f"{name!r} already declared", *_where(node))
        self.scopes[-1][name] = t

    def lookup(self, node: A.Name) -> A.TypeTag:
        for scope in reversed(self.scopes):
            if node.id in scope:
                return scope[node.id]
        if node.id in self.fields:
            return self.fields[node.id]
        raise UnknownIdentifier(f"unknown identifier {node.id!r}", *_where(node))

    # -- statements --------------------------------------------------------

    def block(self, b: A.Block, new_scope: bool = True) -> None:
        if new_scope:
            self.scopes.append({})
        for s in b.stmts:
            self.stmt(s)
        if new_scope:
            self.scopes.pop()

    def stmt(self, s) -> None:
        if isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.VarDecl):
            if s.init is not None:
                self.coerce(s.init, self.rhs(s.init), s.type)
            self.declare(s.name, s.type, s)
        elif isinstance(s, A.Assign):
            tt = self.lvalue(s.target)
            if s.op == "=":
                self.coerce(s.value, self.rhs(s.value), tt)
            else:
                self.coerce(s.target, tt, A.UINT)
                if s.value is not None:
                    self.coerce(s.value, self.expr(s.value), A.UINT)
        elif isinstance(s, A.Require):
            self.coerce(s.cond, self.expr(s.cond), A.BOOL)
        elif isinstance(s, A.Throw):
            pass
        elif isinstance(s, A.If):
            self.coerce(s.cond, self.expr(s.cond), A.BOOL)
            self.block(s.then)
            if s.orelse is not None:
                self.block(s.orelse)
        elif isinstance(s, A.For):
            self.coerce(s.start, self.expr(s.start), A.UINT)
            self.coerce(s.stop, self.expr(s.stop), A.UINT)
            self.scopes.append({})
            self.declare(s.var, A.UINT, s)
            self.block(s.body, new_scope=False)
            self.scopes.pop()
        elif isinstance(s, A.Send):
            self.coerce(s.to, self.expr(s.to), A.ADDRESS)
            self.coerce(s.amount, self.expr(s.amount), A.UINT)
        elif isinstance(s, A.Push):
            tt = self.expr(s.target)
            if not isinstance(tt, A.ArrayType):
                raise TypeMismatch(f"push on non-array of type {tt}", *_where(s))
            self.lvalue(s.target, allow_array=True)
            self.coerce(s.value, self.expr(s.value), tt.elem)
        elif isinstance(s, A.Return):
            if s.value is not None:
                t = self.expr(s.value)
                if not isinstance(t, A.ScalarType):
                    raise TypeMismatch("can only return scalars", *_where(s))
                if t is LIT:
                    self.on_literal(s.value, A.UINT)
        elif isinstance(s, A.ExprStmt):
            if not isinstance(s.expr, A.OracleCall):
                raise TypeMismatch("expression statement must be an oracle_query call", *_where(s))
            self.rhs(s.expr)
        else:  # pragma: no cover - parser never builds other nodes
            raise TypeError(s)

    def lvalue(self, e, allow_array: bool = False) -> A.TypeTag:
        if isinstance(e, A.Name):
            t = self.lookup(e)
        elif isinstance(e, A.Index):
            root = e
            while isinstance(root, A.Index):
                root = root.base
            if not isinstance(root, A.Name):
                raise TypeMismatch("assignment target must be rooted at a variable", *_where(e))
            t = self.expr(e)
        else:
            raise TypeMismatch("invalid assignment target", *_where(e))
        if not isinstance(t, A.ScalarType) and not (allow_array and isinstance(t, A.ArrayType)):
            raise TypeMismatch(f"cannot assign to a value of type {t}", *_where(e))
        return t

    # -- expressions -------------------------------------------------------

    def rhs(self, e) -> A.TypeTag:
        if isinstance(e, A.OracleCall):
            for a in e.args:
                t = self.expr(a)
                if t is LIT:
                    self.on_literal(a, A.UINT)
                elif not isinstance(t, A.ScalarType):
                    raise TypeMismatch("oracle_query arguments must be scalars", *_where(a))
            return A.UINT
        return self.expr(e)

    def coerce(self, node, actual: A.TypeTag, expected: A.TypeTag) -> None:
        if actual is LIT:
            if expected in (A.UINT, A.ADDRESS):
                self.on_literal(node, expected)
                return
        elif actual == expected:
            return
        raise TypeMismatch(f"expected {expected}, got {'integer literal' if actual is LIT else actual}", *_where(node))

    def expr(self, e) -> A.TypeTag:
        if isinstance(e, A.IntLit):
            return LIT
        if isinstance(e, A.BoolLit):
            self.on_literal(e, A.BOOL)
            return A.BOOL
        if isinstance(e, A.Name):
            return self.lookup(e)
        if isinstance(e, A.Env):
            return A.ADDRESS if e.kind == "msg.sender" else A.UINT
        if isinstance(e, A.Length):
            t = self.expr(e.base)
            if not isinstance(t, A.ArrayType):
                raise TypeMismatch(f".length on non-array of type {t}", *_where(e))
            return A.UINT
        if isinstance(e, A.Index):
            t = self.expr(e.base)
            if isinstance(t, A.MapType):
                self.coerce(e.index, self.expr(e.index), t.key)
                return t.value
            if isinstance(t, A.ArrayType):
                self.coerce(e.index, self.expr(e.index), A.UINT)
                return t.elem
            raise TypeMismatch(f"cannot index a value of type {t}", *_where(e))
        if isinstance(e, A.Unary):
            self.coerce(e.operand, self.expr(e.operand), A.BOOL)
            return A.BOOL
        if isinstance(e, A.Binary):
            lt, rt = self.expr(e.left), self.expr(e.right)
            if e.op in _ARITH or e.op in _ORDER:
                self.coerce(e.left, lt, A.UINT)
                self.coerce(e.right, rt, A.UINT)
                return A.UINT if e.op in _ARITH else A.BOOL
            if e.op in _LOGIC:
                self.coerce(e.left, lt, A.BOOL)
                self.coerce(e.right, rt, A.BOOL)
                return A.BOOL
            if e.op in _EQ:
                if lt is LIT and rt is LIT:
                    self.on_literal(e.left, A.UINT)
                    self.on_literal(e.right, A.UINT)
                elif lt is LIT:
                    self.coerce(e.left, lt, rt)
                elif rt is LIT:
                    self.coerce(e.right, rt, lt)
                elif lt != rt or not isinstance(lt, A.ScalarType):
                    raise TypeMismatch(f"cannot compare {lt} with {rt}", *_where(e))
                return A.BOOL
        if isinstance(e, A.OracleCall):
            raise TypeMismatch("oracle_query may only appear as a statement or assignment source", *_where(e))
        raise TypeError(e)  # pragma: no cover


def check(contract: A.ContractDef) -> None:
    Checker(contract).check()


def literal_types(contract: A.ContractDef) -> list[tuple[object, A.ScalarType]]:
    """Every literal occurrence paired with the scalar type its context gives it."""
    found: list[tuple[object, A.ScalarType]] = []
    Checker(contract, on_literal=lambda node, t: found.append((node, t))).check()
    return found
