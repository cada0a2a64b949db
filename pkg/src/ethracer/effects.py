"""Static read/write sets, purity and HB candidate pairs."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .lang import ast as A

BALANCE = "@balance"
ORACLE = "@oracle"


@dataclass(frozen=True)
class ReadWriteSet:
    reads: frozenset[str] = frozenset()
    writes: frozenset[str] = frozenset()

    @property
    def touched(self) -> frozenset[str]:
        return self.reads | self.writes

    def to_json(self) -> dict:
        return {"reads": sorted(self.reads), "writes": sorted(self.writes)}


def _root(e) -> A.Expr:
    while isinstance(e, A.Index):
        e = e.base
    return e


def rw_set(f: A.FunctionDef, fields: Iterable[str]) -> ReadWriteSet:
    """Key-insensitive, path-insensitive over-approximation of touched fields.

    Assignment targets are writes (compound assignments also read); every
    other field occurrence is a read. ``balance(this)`` reads ``@balance``;
    ``send`` and payable value credit write it. ``oracle_query`` writes
    ``@oracle``; ``__callback`` consumes a pending query, so reads and writes it.
    """
    fields = frozenset(fields)
    reads: set[str] = set()
    writes: set[str] = set()

    def read_expr(e) -> None:
        for n in A.walk(e):
            if isinstance(n, A.Name) and n.id in fields:
                reads.add(n.id)
            elif isinstance(n, A.Env) and n.kind == "balance":
                reads.add(BALANCE)
            elif isinstance(n, A.OracleCall):
                writes.add(ORACLE)

    def target(t, also_read: bool) -> None:
        root = _root(t)
        if isinstance(root, A.Name) and root.id in fields:
            writes.add(root.id)
            if also_read:
                reads.add(root.id)
        # index expressions inside the target are ordinary reads
        e = t
        while isinstance(e, A.Index):
            read_expr(e.index)
            e = e.base

    def stmt(s) -> None:
        if isinstance(s, A.Block):
            for x in s.stmts:
                stmt(x)
        elif isinstance(s, A.Assign):
            target(s.target, also_read=s.op != "=")
            if s.value is not None:
                read_expr(s.value)
        elif isinstance(s, A.Push):
            target(s.target, also_read=False)
            read_expr(s.value)
        elif isinstance(s, A.Send):
            writes.add(BALANCE)
            read_expr(s.to)
            read_expr(s.amount)
        elif isinstance(s, A.If):
            read_expr(s.cond)
            stmt(s.then)
            if s.orelse is not None:
                stmt(s.orelse)
        elif isinstance(s, A.For):
            read_expr(s.start)
            read_expr(s.stop)
            stmt(s.body)
        else:
            for child in A.children(s):
                read_expr(child)

    stmt(f.body)
    if f.payable:
        writes.add(BALANCE)
    if f.name == A.CALLBACK:
        reads.add(ORACLE)
        writes.add(ORACLE)
    return ReadWriteSet(frozenset(reads), frozenset(writes))


def rw_sets(c: A.ContractDef) -> dict[str, ReadWriteSet]:
    names = c.field_names
    return {f.name: rw_set(f, names) for f in c.functions}


def pure_events_filter(c: A.ContractDef) -> set[str]:
    """Functions that touch no state at all; they generate no events."""
    return {name for name, rw in rw_sets(c).items() if not rw.reads and not rw.writes}


def hb_candidate_pairs(c: A.ContractDef) -> set[tuple[str, str]]:
    """Function pairs that may be ordered by weak happens-before.

    Pairs are returned as name-sorted tuples. ``{f, g}`` qualifies when they
    share a field that at least one of them writes; ``(f, f)`` qualifies when
    ``f`` writes a field it also reads.
    """
    sets = rw_sets(c)
    pure = {n for n, rw in sets.items() if not rw.reads and not rw.writes}
    live = [f.name for f in c.functions if f.name not in pure]
    out: set[tuple[str, str]] = set()
    for f, g in combinations(live, 2):
        a, b = sets[f], sets[g]
        if (a.touched & b.touched) & (a.writes | b.writes):
            out.add(tuple(sorted((f, g))))
    for f in live:
        if sets[f].reads & sets[f].writes:
            out.add((f, f))
    return out
