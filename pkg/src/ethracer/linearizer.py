"""Linearizability checking for oracle call/callback contracts.

A logical transaction is an event that issues an oracle query together with
the ``__callback`` event answering that query. A trace is linearizable when
no two transactions overlap. The checker runs every atomic arrangement of a
group of transactions first and memoizes the resulting outputs as canonical;
any interleaved arrangement ending elsewhere is a violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Callable, Iterator, Optional, Sequence

from .lang import ast as A
from .state import Event, WorldState, output_of
from .vm import VM, Mode, TraceOutcome

# a symbolic step: ("c", t) is transaction t's call, ("r", t) its return
Step = tuple[str, int]
PHANTOM_QID = 0


class NoCallback(ValueError):
    """The contract declares no ``__callback``; linearizability does not apply."""


@dataclass(frozen=True)
class LogicalTransaction:
    call: int  # trace positions
    ret: int
    qid: int


@dataclass
class Pairing:
    transactions: list[LogicalTransaction] = field(default_factory=list)
    unmatched: list[int] = field(default_factory=list)
    duplicates: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "transactions": [{"call": t.call, "ret": t.ret, "qid": str(t.qid)} for t in self.transactions],
            "unmatched": list(self.unmatched),
            "duplicates": list(self.duplicates),
        }


def match_call_return(h: Sequence[Event], outcome: TraceOutcome) -> Pairing:
    """Pair each callback with the earlier event that issued its query id.

    Callbacks whose qid was never issued before them are unmatched; a second
    callback for an already answered qid is recorded as a duplicate and the
    first match is kept.
    """
    issued_at: dict[int, int] = {}
    answered: set[int] = set()
    pairing = Pairing()
    for pos, e in enumerate(h):
        if e.fn == A.CALLBACK:
            qid = e.args[0]
            if qid in answered:
                pairing.duplicates.append(pos)
            elif qid in issued_at:
                answered.add(qid)
                pairing.transactions.append(LogicalTransaction(issued_at[qid], pos, qid))
            else:
                pairing.unmatched.append(pos)
        for qid in outcome.issued[pos]:
            issued_at.setdefault(qid, pos)
    return pairing


def is_linearizable(h: Sequence[Event], pairing: Pairing) -> bool:
    """True iff no two logical transactions overlap in ``h``."""
    spans = sorted((t.call, t.ret) for t in pairing.transactions)
    return all(prev[1] < nxt[0] for prev, nxt in zip(spans, spans[1:]))


# ---------------------------------------------------------------------------
# Interleavings
# ---------------------------------------------------------------------------


def interleavings(m: int) -> Iterator[tuple[Step, ...]]:
    """All orders of m calls and m returns with each call before its return, lexicographically."""
    steps = [(kind, t) for t in range(m) for kind in ("c", "r")]
    steps.sort()
    total = 2 * m

    def rec(prefix: list[Step], called: set[int], done: set[int]) -> Iterator[tuple[Step, ...]]:
        if len(prefix) == total:
            yield tuple(prefix)
            return
        for kind, t in steps:
            if kind == "c" and t not in called:
                called.add(t)
                prefix.append((kind, t))
                yield from rec(prefix, called, done)
                prefix.pop()
                called.discard(t)
            elif kind == "r" and t in called and t not in done:
                done.add(t)
                prefix.append((kind, t))
                yield from rec(prefix, called, done)
                prefix.pop()
                done.discard(t)

    yield from rec([], set(), set())


def is_atomic(order: Sequence[Step]) -> bool:
    """Each call is immediately followed by its own return."""
    return all(order[i][0] == "c" and order[i + 1] == ("r", order[i][1]) for i in range(0, len(order), 2))


def kendall_tau(a: Sequence[Step], b: Sequence[Step]) -> int:
    """Number of adjacent swaps turning ``a`` into ``b`` (same elements assumed)."""
    pos = {x: i for i, x in enumerate(b)}
    seq = [pos[x] for x in a]
    return sum(1 for i, j in combinations(range(len(seq)), 2) if seq[i] > seq[j])


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinViolation:
    calls: tuple[int, ...]  # indices into the call-event list
    results: tuple
    order: tuple[Step, ...]
    closest: tuple[Step, ...]
    trace: tuple[Event, ...]
    closest_trace: tuple[Event, ...]
    output: bytes = field(repr=False)
    closest_output: bytes = field(repr=False)
    pairing: Pairing = field(compare=False, repr=False, default_factory=Pairing)

    @property
    def fn_seq(self) -> tuple[str, ...]:
        return tuple(e.fn for e in self.trace)


@dataclass
class LinResult:
    violations: list[LinViolation]
    raw_violations: int = 0
    canonical_outputs: int = 0
    traces_checked: int = 0
    groups: int = 0
    skipped: Optional[str] = None

    def to_stats(self) -> dict:
        return {
            "groups": self.groups,
            "traces_checked": self.traces_checked,
            "canonical_outputs": self.canonical_outputs,
            "raw_violations": self.raw_violations,
            "skipped": self.skipped,
        }


CallbackFactory = Callable[[int, object], Event]


def run_order(
    vm: VM,
    s0: WorldState,
    calls: Sequence[Event],
    results: Sequence,
    order: Sequence[Step],
    make_callback: CallbackFactory,
) -> tuple[tuple[Event, ...], WorldState]:
    """Execute a symbolic order in tolerant mode, resolving qids as they are issued.

    A return whose call issued no query (because it reverted) carries a qid
    that was never issued, so it reverts as well.
    """
    state = s0
    qids: dict[int, int] = {}
    trace: list[Event] = []
    for pos, (kind, t) in enumerate(order):
        if kind == "c":
            e = calls[t]
        else:
            e = make_callback(qids.get(t, PHANTOM_QID), results[t])
        out = vm.exec_event(state, e, origin=pos)
        if kind == "c" and out.ok and out.issued:
            qids[t] = out.issued[0]
        if out.ok:
            state = out.state
        trace.append(e)
    return tuple(trace), state


def check_lin(
    vm: VM,
    s0: WorldState,
    calls: Sequence[Event],
    callback_results: Sequence,
    kmax: int = 6,
    *,
    make_callback: CallbackFactory,
    compare_transfers: bool = False,
) -> LinResult:
    """Find interleavings whose output no atomic arrangement reproduces.

    Groups of 2 to ``kmax // 2`` call events are checked, once per assignment
    of callback results to transactions. Violations are deduplicated by the
    function sequence of the flagged trace; the closest canonical order
    (Kendall tau, ties broken lexicographically) is reported alongside.
    """
    if not vm.contract.has_callback:
        raise NoCallback(f"{vm.contract.name} declares no {A.CALLBACK}")
    if len(calls) < 2:
        return LinResult([], skipped="fewer than two oracle-issuing events")
    res = LinResult([])
    seen: set[tuple[str, ...]] = set()
    for m in range(2, max(2, kmax // 2) + 1):
        orders = list(interleavings(m))
        atomic = [o for o in orders if is_atomic(o)]
        mixed = [o for o in orders if not is_atomic(o)]
        for group in combinations(range(len(calls)), m):
            group_calls = [calls[i] for i in group]
            for results in product(callback_results, repeat=m):
                res.groups += 1
                canonical: dict[bytes, tuple[Step, ...]] = {}
                runs: dict[tuple[Step, ...], tuple[tuple[Event, ...], bytes]] = {}
                for o in atomic:
                    trace, final = run_order(vm, s0, group_calls, results, o, make_callback)
                    out = output_of(final, compare_transfers)
                    runs[o] = (trace, out)
                    canonical.setdefault(out, o)
                res.canonical_outputs += len(canonical)
                res.traces_checked += len(orders)
                for o in mixed:
                    trace, final = run_order(vm, s0, group_calls, results, o, make_callback)
                    out = output_of(final, compare_transfers)
                    if out in canonical:
                        continue
                    res.raw_violations += 1
                    closest = min(atomic, key=lambda a: (kendall_tau(o, a), a))
                    ctrace, cout = runs[closest]
                    outcome = vm.exec_trace(s0, trace, Mode.TOLERANT)
                    v = LinViolation(
                        tuple(group), tuple(results), o, closest, trace, ctrace, out, cout,
                        match_call_return(trace, outcome),
                    )
                    if v.fn_seq not in seen:
                        seen.add(v.fn_seq)
                        res.violations.append(v)
    return res
