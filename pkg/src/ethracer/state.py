"""World state, messages/events and canonical outputs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Mapping as TMapping, Optional

from .lang import ast as A

WORD = 2**256
ADDRESS_LIMIT = 2**160


class Mapping(dict):
    """Storage mapping with Solidity zero-default reads."""

    __slots__ = ("value_type",)

    def __init__(self, value_type: A.TypeTag, *args):
        super().__init__(*args)
        self.value_type = value_type

    def read(self, key):
        try:
            return self[key]
        except KeyError:
            return default_value(self.value_type)

    def slot(self, key) -> "Mapping":
        """Nested mapping at ``key``, created on first write."""
        child = self.get(key)
        if child is None:
            child = Mapping(self.value_type.value)
            self[key] = child
        return child

    def deep_copy(self) -> "Mapping":
        if isinstance(self.value_type, A.MapType):
            return Mapping(self.value_type, {k: v.deep_copy() for k, v in self.items()})
        return Mapping(self.value_type, self)


def default_value(t: A.TypeTag):
    if isinstance(t, A.MapType):
        return Mapping(t.value)
    if isinstance(t, A.ArrayType):
        return []
    return False if t == A.BOOL else 0


def _copy_value(v):
    if isinstance(v, Mapping):
        return v.deep_copy()
    if isinstance(v, list):
        return list(v)
    return v


@dataclass
class WorldState:
    """Contract storage plus the slice of chain state the analysis needs.

    Treated as a value: the interpreter never mutates a state it was given,
    it works on a :meth:`clone`.
    """

    fields: dict[str, Any]
    balance: int = 0
    ext_balances: dict[int, int] = field(default_factory=dict)
    pending_queries: dict[int, tuple[int, tuple]] = field(default_factory=dict)
    next_qid: int = 1
    transfer_log: tuple[tuple[int, int, bool], ...] = ()

    @classmethod
    def initial(cls, contract: A.ContractDef, **kw) -> "WorldState":
        fields = {}
        for fd in contract.fields:
            if fd.init is not None:
                fields[fd.name] = fd.init.value
            else:
                fields[fd.name] = default_value(fd.type)
        return cls(fields, **kw)

    def clone(self) -> "WorldState":
        return WorldState(
            {k: _copy_value(v) for k, v in self.fields.items()},
            self.balance,
            dict(self.ext_balances),
            dict(self.pending_queries),
            self.next_qid,
            self.transfer_log,
        )

    def total_ether(self) -> int:
        return self.balance + sum(self.ext_balances.values())


# ---------------------------------------------------------------------------
# Messages and events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Message:
    sender: int
    value: int
    fname: str
    args: tuple = ()
    timestamp: int = 0
    blocknumber: int = 0


@dataclass(frozen=True)
class Event:
    """A function name paired with the message that invokes it."""

    fn: str
    msg: Message

    def __post_init__(self):
        if self.fn != self.msg.fname:
            raise ValueError(f"event function {self.fn!r} does not match message fname {self.msg.fname!r}")

    @classmethod
    def call(cls, fn: str, sender: int, *args, value: int = 0, timestamp: int = 0, blocknumber: int = 0) -> "Event":
        return cls(fn, Message(sender, value, fn, tuple(args), timestamp, blocknumber))

    @property
    def sender(self) -> int:
        return self.msg.sender

    @property
    def args(self) -> tuple:
        return self.msg.args

    def label(self, names: Optional[TMapping[int, str]] = None) -> str:
        def show(a):
            if isinstance(a, bool):
                return "true" if a else "false"
            if names and a in names:
                return names[a]
            return str(a)

        who = show(self.msg.sender)
        val = f", value={self.msg.value}" if self.msg.value else ""
        return f"{self.fn}({', '.join(show(a) for a in self.msg.args)})@{who}{val}"


# ---------------------------------------------------------------------------
# Canonical output
# ---------------------------------------------------------------------------


def _normalize(v):
    if isinstance(v, Mapping):
        items = []
        for k in sorted(v):
            nv = _normalize(v[k])
            if nv in ("0", False, []):
                continue
            items.append([_scalar(k), nv])
        return items
    if isinstance(v, list):
        return [_normalize(x) for x in v]
    return _scalar(v)


def _scalar(v):
    if isinstance(v, bool):
        return v
    return str(v)


def output_of(state: WorldState, compare_transfers: bool = False) -> bytes:
    """Canonical bytes for the observable contract state.

    Mapping keys are sorted and zero-valued entries dropped, so absent keys and
    explicit zero writes serialize identically. The transfer log is left out
    unless ``compare_transfers`` is set.
    """
    doc: dict[str, Any] = {
        "balance": str(state.balance),
        "fields": {name: _normalize(v) for name, v in state.fields.items()},
    }
    if compare_transfers:
        doc["transfers"] = [[str(to), str(amt), ok] for to, amt, ok in state.transfer_log]
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def output_hash(output: bytes) -> str:
    return hashlib.sha256(output).hexdigest()
