from __future__ import annotations

from . import ast as A
from .parser import BINARY_PRECEDENCE

_INDENT = "    "


def _lit(e: A.IntLit) -> str:
    return hex(e.value) if e.hex else str(e.value)


def format_expr(e, parent_prec: int = 0) -> str:
    if isinstance(e, A.IntLit):
        return _lit(e)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.Env):
        return "balance(this)" if e.kind == "balance" else e.kind
    if isinstance(e, A.Index):
        return f"{format_expr(e.base, 99)}[{format_expr(e.index)}]"
    if isinstance(e, A.Length):
        return f"{format_expr(e.base, 99)}.length"
    if isinstance(e, A.Unary):
        return f"!{format_expr(e.operand, 98)}"
    if isinstance(e, A.OracleCall):
        return f"oracle_query({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, A.Binary):
        prec = BINARY_PRECEDENCE[e.op]
        # left-associative: right operand needs parens at equal precedence
        text = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec + 1)}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(e)


def _block(b: A.Block, depth: int) -> list[str]:
    lines = []
    for s in b.stmts:
        lines.extend(_stmt(s, depth))
    return lines


def _stmt(s, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(s, A.Block):
        return [pad + "{", *_block(s, depth + 1), pad + "}"]
    if isinstance(s, A.VarDecl):
        init = f" = {format_expr(s.init)}" if s.init is not None else ""
        return [f"{pad}{s.type} {s.name}{init};"]
    if isinstance(s, A.Assign):
        target = format_expr(s.target)
        if s.value is None:
            return [f"{pad}{target}{s.op};"]
        return [f"{pad}{target} {s.op} {format_expr(s.value)};"]
    if isinstance(s, A.Require):
        return [f"{pad}require({format_expr(s.cond)});"]
    if isinstance(s, A.Throw):
        return [f"{pad}throw;"]
    if isinstance(s, A.If):
        lines = [f"{pad}if ({format_expr(s.cond)}) {{", *_block(s.then, depth + 1)]
        if s.orelse is not None:
            lines += [f"{pad}}} else {{", *_block(s.orelse, depth + 1)]
        return lines + [pad + "}"]
    if isinstance(s, A.For):
        head = f"{pad}for ({s.var} in {format_expr(s.start)} .. {format_expr(s.stop)}) {{"
        return [head, *_block(s.body, depth + 1), pad + "}"]
    if isinstance(s, A.Send):
        return [f"{pad}send({format_expr(s.to)}, {format_expr(s.amount)});"]
    if isinstance(s, A.Push):
        return [f"{pad}{format_expr(s.target)}.push({format_expr(s.value)});"]
    if isinstance(s, A.Return):
        return [f"{pad}return;" if s.value is None else f"{pad}return {format_expr(s.value)};"]
    if isinstance(s, A.ExprStmt):
        return [f"{pad}{format_expr(s.expr)};"]
    raise TypeError(s)


def format_contract(c: A.ContractDef) -> str:
    """Render a contract back to source text that re-parses to an equal AST."""
    lines = [f"contract {c.name} {{"]
    for fd in c.fields:
        init = f" = {format_expr(fd.init)}" if fd.init is not None else ""
        lines.append(f"{_INDENT}{fd.type} {fd.name}{init};")
    for f in c.functions:
        if len(lines) > 1:
            lines.append("")
        params = ", ".join(f"{p.type} {p.name}" for p in f.params)
        mods = " payable" if f.payable else ""
        if f.returns is not None:
            mods += f" returns ({f.returns})"
        lines.append(f"{_INDENT}function {f.name}({params}){mods} {{")
        lines.extend(_block(f.body, 2))
        lines.append(_INDENT + "}")
    lines.append("}")
    return "\n".join(lines) + "\n"
