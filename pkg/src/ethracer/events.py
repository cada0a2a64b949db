"""Scenario-driven generation of the concrete event set."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from itertools import islice, product
from pathlib import Path
from typing import Any, Iterator, Optional, Sequence

from . import snapshot
from .effects import hb_candidate_pairs, pure_events_filter
from .lang import ast as A
from .lang import harvest_constants
from .state import Event, Message, WorldState
from .vm import VM


class ScenarioError(ValueError):
    pass


class EmptyDomain(ScenarioError):
    pass


class BudgetZero(ScenarioError):
    pass


def actor_address(name: str) -> int:
    """Deterministic 160-bit address for an actor declared without one."""
    return int(hashlib.sha256(name.encode()).hexdigest()[:40], 16)


@dataclass(frozen=True)
class Actor:
    name: str
    address: int
    balance: int = 0


@dataclass(frozen=True)
class EventSpec:
    """An event written in a scenario file; ``args`` are still raw JSON values."""

    fn: str
    sender: Optional[str] = None
    value: Optional[Any] = None
    args: Optional[tuple] = None
    timestamp: Optional[Any] = None
    blocknumber: Optional[Any] = None

    @classmethod
    def from_json(cls, fn: str, raw) -> "EventSpec":
        if isinstance(raw, list):
            return cls(fn, args=tuple(raw))
        if not isinstance(raw, dict):
            raise ScenarioError(f"bad event entry for {fn}: {raw!r}")
        args = raw.get("args")
        return cls(
            raw.get("fn", fn),
            raw.get("sender"),
            raw.get("value"),
            tuple(args) if args is not None else None,
            raw.get("timestamp"),
            raw.get("blocknumber"),
        )


@dataclass
class Scenario:
    actors: list[Actor]
    value_domain: list[int] = field(default_factory=lambda: [0])
    uint_values: list[int] = field(default_factory=list)
    use_harvested: bool = True
    per_function: dict[str, list[EventSpec]] = field(default_factory=dict)
    event_pairs: list[tuple[EventSpec, EventSpec]] = field(default_factory=list)
    events_per_hb_pair: int = 3
    events_per_other_fn: int = 1
    budget_overrides: dict[str, int] = field(default_factory=dict)
    timestamp: int = 0
    blocknumber: int = 0
    max_trace_len: int = 6
    min_trace_len: int = 2
    callback_results: list[Any] = field(default_factory=lambda: [0])
    oracle: Optional[str] = None
    initial_state: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.actors:
            raise ScenarioError("scenario needs at least one actor")
        if self.max_trace_len < 2:
            raise ScenarioError("max_trace_len must be at least 2")
        if not 2 <= self.min_trace_len <= self.max_trace_len:
            raise ScenarioError("min_trace_len must lie in [2, max_trace_len]")
        budgets = [self.events_per_hb_pair, self.events_per_other_fn, *self.budget_overrides.values()]
        if any(b < 1 for b in budgets):
            raise BudgetZero("event budgets must be at least 1")

    # -- names -------------------------------------------------------------

    @property
    def names(self) -> dict[str, int]:
        table = {a.name: a.address for a in self.actors}
        if self.oracle_name not in table:
            table[self.oracle_name] = actor_address(self.oracle_name)
        return table

    @property
    def oracle_name(self) -> str:
        return self.oracle or "oracle"

    @property
    def address_names(self) -> dict[int, str]:
        return {addr: name for name, addr in self.names.items()}

    def budget_for(self, fn: str, in_hb_pair: bool) -> int:
        if fn in self.budget_overrides:
            return self.budget_overrides[fn]
        return self.events_per_hb_pair if in_hb_pair else self.events_per_other_fn

    # -- state -------------------------------------------------------------

    def initial_world(self, contract: A.ContractDef) -> WorldState:
        """Initial state: the snapshot, with actor balances filled in where unset."""
        s = snapshot.load_state(contract, self.initial_state, self.names)
        for a in self.actors:
            s.ext_balances.setdefault(a.address, a.balance)
        return s

    # -- loading -----------------------------------------------------------

    @classmethod
    def from_json(cls, doc: dict) -> "Scenario":
        actors = []
        for i, raw in enumerate(doc.get("actors", [])):
            if isinstance(raw, str):
                raw = {"name": raw}
            name = raw.get("name", f"actor{i}")
            addr = snapshot.parse_int(raw["address"]) if "address" in raw else actor_address(name)
            actors.append(Actor(name, addr, snapshot.parse_int(raw.get("balance", 0))))
        budgets = doc.get("budgets", {})
        per_function = {
            fn: [EventSpec.from_json(fn, e) for e in entries] for fn, entries in doc.get("per_function", {}).items()
        }
        pairs = []
        for pair in doc.get("event_pairs", []):
            if len(pair) != 2:
                raise ScenarioError(f"event pair must have two entries: {pair!r}")
            pairs.append(tuple(EventSpec.from_json(p.get("fn", ""), p) for p in pair))
        return cls(
            actors=actors,
            value_domain=[snapshot.parse_int(v) for v in doc.get("value_domain", [0])],
            uint_values=[snapshot.parse_int(v) for v in doc.get("uint_values", [])],
            use_harvested=bool(doc.get("use_harvested", True)),
            per_function=per_function,
            event_pairs=pairs,
            events_per_hb_pair=int(budgets.get("events_per_hb_pair", 3)),
            events_per_other_fn=int(budgets.get("events_per_other_fn", 1)),
            budget_overrides={k: int(v) for k, v in budgets.get("per_function", {}).items()},
            timestamp=snapshot.parse_int(doc.get("timestamp", 0)),
            blocknumber=snapshot.parse_int(doc.get("blocknumber", 0)),
            max_trace_len=int(doc.get("max_trace_len", 6)),
            min_trace_len=int(doc.get("min_trace_len", 2)),
            callback_results=list(doc.get("callback_results", [0])),
            oracle=doc.get("oracle"),
            initial_state=doc.get("initial_state", {}),
            raw=doc,
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Event sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventSet:
    """Ordered, duplicate-free events; positions are the stable event indices.

    ``declared_pairs`` are index pairs that came from scenario ``event_pairs``;
    ``pair_only`` holds the indices whose events exist only because of them.
    """

    events: tuple[Event, ...]
    declared_pairs: tuple[tuple[int, int], ...] = ()
    pair_only: frozenset[int] = frozenset()

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __getitem__(self, i: int) -> Event:
        return self.events[i]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.fn for e in self.events)


class _Builder:
    def __init__(self, contract: A.ContractDef, sc: Scenario):
        self.contract = contract
        self.sc = sc
        self.names = sc.names
        self.vm = VM(contract)
        consts = harvest_constants(contract) if sc.use_harvested else {}
        self.uints = sorted(set(consts.get("uint256", set())) | set(sc.uint_values))

    def resolve(self, spec: EventSpec, f: A.FunctionDef, sender: Optional[int] = None, value: Optional[int] = None) -> Event:
        sc = self.sc
        if spec.sender is not None:
            sender = snapshot.parse_address(spec.sender, self.names)
        if spec.value is not None:
            value = snapshot.parse_int(spec.value)
        if sender is None or value is None:
            raise ScenarioError(f"event for {f.name} lacks sender or value")
        raw_args = spec.args or ()
        if len(raw_args) != len(f.params):
            raise ScenarioError(f"{f.name} expects {len(f.params)} arguments, scenario gives {len(raw_args)}")
        try:
            args = tuple(snapshot.parse_scalar(p.type, a, self.names) for p, a in zip(f.params, raw_args))
        except ValueError as exc:
            raise ScenarioError(f"{f.name}: {exc}") from None
        ts = snapshot.parse_int(spec.timestamp) if spec.timestamp is not None else sc.timestamp
        bn = snapshot.parse_int(spec.blocknumber) if spec.blocknumber is not None else sc.blocknumber
        e = Event(f.name, Message(sender, value, f.name, args, ts, bn))
        self.vm.validate(e)
        return e

    def senders(self) -> list[int]:
        return [a.address for a in self.sc.actors]

    def values(self, f: A.FunctionDef) -> list[int]:
        return list(dict.fromkeys(self.sc.value_domain)) if f.payable else [0]

    def domain(self, t: A.ScalarType, f: A.FunctionDef) -> list:
        if t == A.BOOL:
            dom = [False, True]
        elif t == A.ADDRESS:
            dom = self.senders()
        else:
            dom = self.uints
        if not dom:
            raise EmptyDomain(f"no candidate values for a {t} parameter of {f.name}")
        return dom

    def explicit(self, f: A.FunctionDef) -> Iterator[Event]:
        for spec in self.sc.per_function.get(f.name, []):
            if spec.sender is not None:
                yield self.resolve(spec, f, value=0)
                continue
            values = self.values(f) if spec.value is None else [0]
            for s, v in product(self.senders(), values):
                yield self.resolve(spec, f, sender=s, value=v)

    def enumerated(self, f: A.FunctionDef) -> Iterator[Event]:
        doms = [self.domain(p.type, f) for p in f.params]
        for combo in product(self.senders(), self.values(f), *doms):
            sender, value, *args = combo
            yield Event(f.name, Message(sender, value, f.name, tuple(args), self.sc.timestamp, self.sc.blocknumber))


def generate_events(contract: A.ContractDef, sc: Scenario, s0: Optional[WorldState] = None) -> EventSet:
    """Build the concrete event set for fuzzing.

    Pure functions and ``__callback`` get no statically generated events,
    except callbacks for queries already pending in ``s0``. Each remaining
    function contributes explicit scenario events first, then the
    lexicographic product of sender x value x argument domains, truncated to
    its budget. Functions named in scenario ``event_pairs`` take their events
    from those pairs instead; pair events are appended after the rest.
    """
    b = _Builder(contract, sc)
    pure = pure_events_filter(contract)
    hb_fns = {f for pair in hb_candidate_pairs(contract) for f in pair}
    paired_fns = {spec.fn for pair in sc.event_pairs for spec in pair}
    for fn in paired_fns:
        if fn not in b.vm.functions:
            raise ScenarioError(f"event pair names unknown function {fn!r}")

    index: dict[Event, int] = {}
    events: list[Event] = []

    def add(e: Event) -> int:
        if e not in index:
            index[e] = len(events)
            events.append(e)
        return index[e]

    for f in contract.functions:
        if f.name in pure or f.name == A.CALLBACK or f.name in paired_fns:
            continue
        if f.name == A.FALLBACK:
            value = sc.value_domain[0] if f.payable and sc.value_domain else 0
            for s in b.senders():
                add(b.resolve(EventSpec(f.name, args=()), f, sender=s, value=value))
            continue
        budget = sc.budget_for(f.name, f.name in hb_fns)
        seen: dict[Event, None] = {}
        stream = (e for src in (b.explicit(f), b.enumerated(f)) for e in src)
        for e in stream:
            seen.setdefault(e)
            if len(seen) >= budget:
                break
        for e in islice(seen, budget):
            add(e)

    generated = set(range(len(events)))
    declared = []
    for left, right in sc.event_pairs:
        ia = add(b.resolve(left, b.vm.functions[left.fn], value=0))
        ib = add(b.resolve(right, b.vm.functions[right.fn], value=0))
        declared.append((ia, ib))

    if contract.has_callback and s0 is not None and s0.pending_queries:
        cb = b.vm.functions[A.CALLBACK]
        oracle = b.names[sc.oracle_name]
        for qid in sorted(s0.pending_queries):
            for r in sc.callback_results:
                args = [qid] + ([r] if len(cb.params) > 1 else [])
                add(b.resolve(EventSpec(A.CALLBACK, args=tuple(args)), cb, sender=oracle, value=0))

    for e in events:
        b.vm.validate(e)
    pair_only = frozenset(i for i in range(len(events)) if i not in generated and any(i in p for p in declared))
    return EventSet(tuple(events), tuple(declared), pair_only)


def oracle_call_functions(contract: A.ContractDef) -> list[str]:
    """Functions whose body issues an oracle query."""
    return [f.name for f in contract.functions if any(isinstance(n, A.OracleCall) for n in A.walk(f.body))]


def callback_event(sc: Scenario, contract: A.ContractDef, qid: int, result) -> Event:
    cb = contract.function(A.CALLBACK)
    oracle = sc.names[sc.oracle_name]
    args: list = [qid]
    if len(cb.params) > 1:
        args.append(snapshot.parse_scalar(cb.params[1].type, result, sc.names))
    return Event(A.CALLBACK, Message(oracle, 0, A.CALLBACK, tuple(args), sc.timestamp, sc.blocknumber))
