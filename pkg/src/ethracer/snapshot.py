"""JSON snapshots of world state.

Schema::

    {"fields": {...}, "balance": "0x..", "ext_balances": {"<addr>": "<wei>"},
     "pending_queries": {"<qid>": {"origin": -1, "args": [...]}}, "next_qid": "1"}

Integers are decimal strings, ``0x`` hex strings or JSON numbers. Addresses
may also be actor names when a name table is supplied.
"""

from __future__ import annotations

from typing import Any, Mapping as TMapping, Optional

from .lang import ast as A
from .state import Mapping, WorldState


def parse_int(v: Any) -> int:
    if isinstance(v, bool):
        raise ValueError(f"expected an integer, got {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        s = v.strip()
        return int(s, 16) if s.lower().startswith("0x") else int(s, 10)
    raise ValueError(f"expected an integer, got {v!r}")


def parse_address(v: Any, names: Optional[TMapping[str, int]] = None) -> int:
    if isinstance(v, str) and names and v in names:
        return names[v]
    return parse_int(v)


def parse_bool(v: Any) -> bool:
    if isinstance(v, bool):
        return v
    if v in ("true", "false"):
        return v == "true"
    raise ValueError(f"expected a bool, got {v!r}")


def parse_scalar(t: A.ScalarType, v: Any, names: Optional[TMapping[str, int]] = None):
    if t == A.BOOL:
        return parse_bool(v)
    if t == A.ADDRESS:
        return parse_address(v, names)
    return parse_int(v)


def _parse_value(t: A.TypeTag, v: Any, names):
    if isinstance(t, A.MapType):
        if not isinstance(v, dict):
            raise ValueError(f"expected an object for {t}, got {v!r}")
        m = Mapping(t.value)
        for k, x in v.items():
            m[parse_scalar(t.key, k, names)] = _parse_value(t.value, x, names)
        return m
    if isinstance(t, A.ArrayType):
        return [parse_scalar(t.elem, x, names) for x in v]
    return parse_scalar(t, v, names)


def load_state(contract: A.ContractDef, doc: dict, names: Optional[TMapping[str, int]] = None) -> WorldState:
    """Build a state from a snapshot; fields it omits take their declared defaults."""
    s = WorldState.initial(contract)
    for name, raw in (doc.get("fields") or {}).items():
        try:
            fd = contract.field_decl(name)
        except KeyError:
            raise ValueError(f"snapshot sets unknown field {name!r}") from None
        s.fields[name] = _parse_value(fd.type, raw, names)
    s.balance = parse_int(doc.get("balance", 0))
    s.ext_balances = {parse_address(k, names): parse_int(v) for k, v in (doc.get("ext_balances") or {}).items()}
    for k, q in (doc.get("pending_queries") or {}).items():
        s.pending_queries[parse_int(k)] = (int(q.get("origin", -1)), tuple(parse_int(a) for a in q.get("args", [])))
    default_next = max(s.pending_queries, default=0) + 1
    s.next_qid = parse_int(doc.get("next_qid", default_next))
    return s


def _dump_value(v):
    if isinstance(v, Mapping):
        return {_dump_key(k): _dump_value(x) for k, x in sorted(v.items())}
    if isinstance(v, list):
        return [_dump_value(x) for x in v]
    if isinstance(v, bool):
        return v
    return str(v)


def _dump_key(k) -> str:
    if isinstance(k, bool):
        return "true" if k else "false"
    return str(k)


def dump_state(s: WorldState) -> dict:
    """Inverse of :func:`load_state` (addresses written as decimal strings)."""
    return {
        "fields": {name: _dump_value(v) for name, v in s.fields.items()},
        "balance": str(s.balance),
        "ext_balances": {str(k): str(v) for k, v in sorted(s.ext_balances.items())},
        "pending_queries": {
            str(q): {"origin": origin, "args": [str(a) for a in args]}
            for q, (origin, args) in sorted(s.pending_queries.items())
        },
        "next_qid": str(s.next_qid),
    }
