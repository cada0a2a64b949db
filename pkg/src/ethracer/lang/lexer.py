from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ContractSyntaxError

KEYWORDS = frozenset(
    {
        "contract", "function", "payable", "returns", "return", "mapping",
        "uint256", "uint", "bool", "address", "if", "else", "for", "in",
        "require", "throw", "send", "true", "false", "msg", "block", "now",
        "balance", "this", "oracle_query",
    }
)

# longest operators first
_OPERATORS = [
    "=>", "..", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=",
    "++", "--", "{", "}", "(", ")", "[", "]", ";", ",", ".", "=", "<", ">", "+",
    "-", "*", "/", "%", "!",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<linecomment>//[^\n]*)
  | (?P<blockcomment>/\*.*?\*/)
  | (?P<hex>0[xX][0-9a-fA-F]+)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>"""
    + "|".join(re.escape(o) for o in _OPERATORS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'kw', 'int', 'hex', 'op', 'eof'
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise ContractSyntaxError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ident" and text in KEYWORDS:
            tokens.append(Token("kw", text, line, col))
        elif kind in ("ident", "int", "hex", "op"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
