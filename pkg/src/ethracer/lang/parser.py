"""Recursive-descent parser for ``.fsol`` contract sources."""

from __future__ import annotations

from . import ast as A
from .errors import ContractSyntaxError
from .lexer import Token, tokenize

_SCALAR_WORDS = {"uint256": "uint256", "uint": "uint256", "bool": "bool", "address": "address"}

# binary operator precedence; higher binds tighter
BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}

ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "%=")


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, *expected: str) -> ContractSyntaxError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ContractSyntaxError(f"unexpected {found}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error("identifier")
        return self.advance()

    # -- declarations ------------------------------------------------------

    def contract(self) -> A.ContractDef:
        start = self.expect("contract")
        name = self.ident().text
        self.expect("{")
        fields: list[A.FieldDecl] = []
        functions: list[A.FunctionDef] = []
        while not self.at("}"):
            if self.at("function"):
                functions.append(self.function())
            elif self.tok.text in _SCALAR_WORDS or self.at("mapping"):
                fields.append(self.field())
            else:
                raise self.error("'function'", "type")
        self.expect("}")
        if self.tok.kind != "eof":
            raise self.error("end of input")
        return A.ContractDef(name, tuple(fields), tuple(functions), pos=(start.line, start.col))

    def scalar(self) -> A.ScalarType:
        t = self.tok
        if t.kind == "kw" and t.text in _SCALAR_WORDS:
            self.advance()
            return A.ScalarType(_SCALAR_WORDS[t.text])
        raise self.error("uint256", "bool", "address")

    def field_type(self) -> A.TypeTag:
        if self.at("mapping"):
            return self.mapping()
        elem = self.scalar()
        if self.at("["):
            self.advance()
            self.expect("]")
            return A.ArrayType(elem)
        return elem

    def mapping(self) -> A.MapType:
        self.expect("mapping")
        self.expect("(")
        key = self.scalar()
        self.expect("=>")
        value = self.mapping() if self.at("mapping") else self.scalar()
        self.expect(")")
        return A.MapType(key, value)

    def field(self) -> A.FieldDecl:
        t = self.tok
        ftype = self.field_type()
        name = self.ident().text
        init = None
        if self.at("="):
            self.advance()
            init = self.literal()
        self.expect(";")
        return A.FieldDecl(name, ftype, init, pos=(t.line, t.col))

    def literal(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(int(t.text), pos=(t.line, t.col))
        if t.kind == "hex":
            self.advance()
            return A.IntLit(int(t.text, 16), hex=True, pos=(t.line, t.col))
        if self.at("true") or self.at("false"):
            self.advance()
            return A.BoolLit(t.text == "true", pos=(t.line, t.col))
        raise self.error("literal")

    def function(self) -> A.FunctionDef:
        start = self.expect("function")
        name = self.ident().text
        self.expect("(")
        params: list[A.Param] = []
        if not self.at(")"):
            while True:
                t = self.tok
                ptype = self.scalar()
                params.append(A.Param(self.ident().text, ptype, pos=(t.line, t.col)))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        payable = False
        returns = None
        if self.at("payable"):
            self.advance()
            payable = True
        if self.at("returns"):
            self.advance()
            self.expect("(")
            returns = self.scalar()
            self.expect(")")
        body = self.block()
        return A.FunctionDef(name, tuple(params), payable, body, returns, pos=(start.line, start.col))

    # -- statements --------------------------------------------------------

    def block(self) -> A.Block:
        t = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("'}'")
            stmts.append(self.statement())
        self.expect("}")
        return A.Block(tuple(stmts), pos=(t.line, t.col))

    def body(self) -> A.Block:
        if self.at("{"):
            return self.block()
        t = self.tok
        return A.Block((self.statement(),), pos=(t.line, t.col))

    def statement(self) -> A.Stmt:
        t = self.tok
        pos = (t.line, t.col)
        if self.at("{"):
            return self.block()
        if t.kind == "kw" and t.text in _SCALAR_WORDS:
            vtype = self.scalar()
            name = self.ident().text
            init = None
            if self.at("="):
                self.advance()
                init = self.expr()
            self.expect(";")
            return A.VarDecl(vtype, name, init, pos=pos)
        if self.at("require"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return A.Require(cond, pos=pos)
        if self.at("throw"):
            self.advance()
            self.expect(";")
            return A.Throw(pos=pos)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.body()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self.body()
            return A.If(cond, then, orelse, pos=pos)
        if self.at("for"):
            self.advance()
            self.expect("(")
            var = self.ident().text
            self.expect("in")
            start = self.expr()
            self.expect("..")
            stop = self.expr()
            self.expect(")")
            return A.For(var, start, stop, self.body(), pos=pos)
        if self.at("send"):
            self.advance()
            self.expect("(")
            to = self.expr()
            self.expect(",")
            amount = self.expr()
            self.expect(")")
            self.expect(";")
            return A.Send(to, amount, pos=pos)
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(value, pos=pos)
        if self.at("oracle_query"):
            call = self.oracle_call()
            self.expect(";")
            return A.ExprStmt(call, pos=pos)
        if t.kind == "ident":
            target = self.postfix(self.primary())
            if self.at(".") and self.peek().text == "push":
                self.advance()
                self.advance()
                self.expect("(")
                value = self.expr()
                self.expect(")")
                self.expect(";")
                return A.Push(target, value, pos=pos)
            if self.at("++") or self.at("--"):
                op = self.advance().text
                self.expect(";")
                return A.Assign(target, op, None, pos=pos)
            for op in ASSIGN_OPS:
                if self.at(op):
                    self.advance()
                    value = self.expr()
                    self.expect(";")
                    return A.Assign(target, op, value, pos=pos)
            raise self.error(*ASSIGN_OPS, "++", "--", ".push")
        raise self.error("statement")

    # -- expressions -------------------------------------------------------

    def expr(self, min_prec: int = 1) -> A.Expr:
        left = self.unary()
        while True:
            t = self.tok
            prec = BINARY_PRECEDENCE.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.expr(prec + 1)
            left = A.Binary(t.text, left, right, pos=(t.line, t.col))

    def unary(self) -> A.Expr:
        if self.at("!"):
            t = self.advance()
            return A.Unary("!", self.unary(), pos=(t.line, t.col))
        return self.postfix(self.primary())

    def postfix(self, node: A.Expr) -> A.Expr:
        while True:
            t = self.tok
            if self.at("["):
                self.advance()
                idx = self.expr()
                self.expect("]")
                node = A.Index(node, idx, pos=(t.line, t.col))
            elif self.at(".") and self.peek().text == "length":
                self.advance()
                self.advance()
                node = A.Length(node, pos=(t.line, t.col))
            else:
                return node

    def oracle_call(self) -> A.OracleCall:
        t = self.expect("oracle_query")
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.expr())
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        return A.OracleCall(tuple(args), pos=(t.line, t.col))

    def primary(self) -> A.Expr:
        t = self.tok
        pos = (t.line, t.col)
        if t.kind in ("int", "hex") or self.at("true") or self.at("false"):
            return self.literal()
        if t.kind == "ident":
            self.advance()
            return A.Name(t.text, pos=pos)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("msg"):
            self.advance()
            self.expect(".")
            member = self.advance()
            if member.text not in ("sender", "value"):
                self.i -= 1
                raise self.error("sender", "value")
            return A.Env(f"msg.{member.text}", pos=pos)
        if self.at("block"):
            self.advance()
            self.expect(".")
            member = self.advance()
            if member.text != "number":
                self.i -= 1
                raise self.error("number")
            return A.Env("block.number", pos=pos)
        if self.at("now"):
            self.advance()
            return A.Env("now", pos=pos)
        if self.at("balance"):
            self.advance()
            self.expect("(")
            self.expect("this")
            self.expect(")")
            return A.Env("balance", pos=pos)
        if self.at("oracle_query"):
            return self.oracle_call()
        raise self.error("expression")


def parse_syntax(source: str) -> A.ContractDef:
    """Parse without name resolution or type checking."""
    return Parser(source).contract()
