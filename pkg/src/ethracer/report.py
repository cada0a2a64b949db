"""Self-contained JSON analysis reports and their replay verification."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from . import __version__, snapshot
from .effects import pure_events_filter, rw_sets
from .events import EventSet, Scenario, callback_event, generate_events, oracle_call_functions
from .fuzzer import SyncAnalysis, WitnessPair, analyze_sync
from .hb import HBRelation, extract_whb
from .lang import ast as A
from .lang import parse
from .linearizer import LinResult, LinViolation, Step, check_lin, interleavings, is_atomic, run_order
from .state import Event, Message, WorldState, output_hash, output_of
from .vm import VM, Mode


class ReplayMismatch(AssertionError):
    """A report entry did not reproduce on replay."""


@dataclass
class AnalysisOptions:
    sync: bool = True
    lin: bool = False
    min_len: Optional[int] = None
    max_len: Optional[int] = None
    witness_cap: int = 8
    full_pairwise: bool = False
    compare_transfers: bool = False
    timeout_s: Optional[float] = 150 * 60
    max_traces: Optional[int] = None
    jobs: int = 1
    seed: int = 0
    dedupe_by: str = "calls"


@dataclass
class Analysis:
    """Everything one ``analyze`` run computed, before serialization."""

    source: str
    contract: A.ContractDef
    scenario: Scenario
    s0: WorldState
    events: EventSet
    hb: HBRelation
    options: AnalysisOptions
    sync: Optional[SyncAnalysis] = None
    lin: Optional[LinResult] = None
    elapsed_s: float = 0.0

    @property
    def bugs(self) -> int:
        n = 0
        if self.sync is not None:
            n += len(self.sync.witnesses) + len(self.sync.low_priority)
        if self.lin is not None:
            n += len(self.lin.violations)
        return n

    @property
    def truncated(self) -> bool:
        return self.sync is not None and self.sync.stats.truncated


def analyze(source: str, scenario: Scenario, options: Optional[AnalysisOptions] = None) -> Analysis:
    opts = options or AnalysisOptions()
    start = time.monotonic()
    contract = parse(source)
    vm = VM(contract)
    s0 = scenario.initial_world(contract)
    E = generate_events(contract, scenario, s0)
    rel = extract_whb(vm, s0, E)
    kmax = opts.max_len if opts.max_len is not None else scenario.max_trace_len
    kmin = opts.min_len if opts.min_len is not None else scenario.min_trace_len
    result = Analysis(source, contract, scenario, s0, E, rel, opts)
    if opts.sync:
        result.sync = analyze_sync(
            vm, s0, E, rel, kmin, kmax,
            dedupe_by=opts.dedupe_by,
            compare_transfers=opts.compare_transfers,
            witness_cap=opts.witness_cap,
            full_pairwise=opts.full_pairwise,
            timeout_s=opts.timeout_s,
            max_traces=opts.max_traces,
            jobs=opts.jobs,
        )
    if opts.lin:
        issuing = set(oracle_call_functions(contract))
        calls = [e for e in E if e.fn in issuing]
        result.lin = check_lin(
            vm, s0, calls, scenario.callback_results, kmax,
            make_callback=lambda q, r: callback_event(scenario, contract, q, r),
            compare_transfers=opts.compare_transfers,
        )
    result.elapsed_s = time.monotonic() - start
    return result


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _scalar(v) -> Any:
    return v if isinstance(v, bool) else str(v)


def event_to_json(e: Event, names: Optional[dict[int, str]] = None) -> dict:
    m = e.msg
    return {
        "fn": e.fn,
        "sender": str(m.sender),
        "value": str(m.value),
        "args": [_scalar(a) for a in m.args],
        "timestamp": str(m.timestamp),
        "blocknumber": str(m.blocknumber),
        "label": e.label(names),
    }


def event_from_json(contract: A.ContractDef, doc: dict) -> Event:
    f = contract.function(doc["fn"])
    args = tuple(snapshot.parse_scalar(p.type, a) for p, a in zip(f.params, doc["args"]))
    if len(args) != len(doc["args"]):
        raise ReplayMismatch(f"event {doc['fn']} has the wrong number of arguments")
    msg = Message(
        snapshot.parse_int(doc["sender"]), snapshot.parse_int(doc["value"]), f.name, args,
        snapshot.parse_int(doc["timestamp"]), snapshot.parse_int(doc["blocknumber"]),
    )
    return Event(f.name, msg)


def _witness_json(w: WitnessPair, names: Sequence[str], full: Optional[WitnessPair] = None) -> dict:
    calls_a, calls_b = w.calls(names)
    doc = {
        "trace_a": list(w.trace_a),
        "trace_b": list(w.trace_b),
        "calls_a": list(calls_a),
        "calls_b": list(calls_b),
        "valid_a": True,
        "valid_b": True,
        "output_a_sha256": output_hash(w.output_a),
        "output_b_sha256": output_hash(w.output_b),
    }
    if full is not None:
        doc["full"] = _witness_json(full, names)
    return doc


def _steps(order: Sequence[Step]) -> list[str]:
    return [f"{kind}{t}" for kind, t in order]


def _parse_steps(raw: Sequence[str]) -> tuple[Step, ...]:
    return tuple((s[0], int(s[1:])) for s in raw)


def _violation_json(v: LinViolation, calls: Sequence[Event], names) -> dict:
    return {
        "calls": [event_to_json(calls[i], names) for i in v.calls],
        "results": [_scalar(r) for r in v.results],
        "order": _steps(v.order),
        "closest_order": _steps(v.closest),
        "trace": [event_to_json(e, names) for e in v.trace],
        "closest_trace": [event_to_json(e, names) for e in v.closest_trace],
        "calls_seq": list(v.fn_seq),
        "output_sha256": output_hash(v.output),
        "closest_output_sha256": output_hash(v.closest_output),
        "pairing": v.pairing.to_json(),
    }


def to_json(a: Analysis, timing: bool = False) -> dict:
    names = a.scenario.address_names
    fn_names = a.events.names
    opts = a.options
    sets = rw_sets(a.contract)
    doc: dict[str, Any] = {
        "tool": {"name": "ethracer", "version": __version__},
        "contract": {
            "name": a.contract.name,
            "sha256": hashlib.sha256(a.source.encode()).hexdigest(),
            "source": a.source,
        },
        "scenario": a.scenario.raw,
        "initial_state": snapshot.dump_state(a.s0),
        "mode": {
            "sync": opts.sync,
            "lin": opts.lin,
            "compare_transfers": opts.compare_transfers,
            "min_len": opts.min_len if opts.min_len is not None else a.scenario.min_trace_len,
            "max_len": opts.max_len if opts.max_len is not None else a.scenario.max_trace_len,
            "witness_cap": opts.witness_cap,
            "full_pairwise": opts.full_pairwise,
            "dedupe_by": opts.dedupe_by,
            "seed": opts.seed,
        },
        "events": [dict(index=i, **event_to_json(e, names)) for i, e in enumerate(a.events)],
        "rw_sets": {f.name: sets[f.name].to_json() for f in a.contract.functions},
        "pure": sorted(pure_events_filter(a.contract)),
        "hb": {
            "pairs": a.hb.to_json(),
            "named": [[a.events[i].label(names), a.events[j].label(names)] for i, j in a.hb],
        },
        "truncated": a.truncated,
    }
    if a.sync is not None:
        s = a.sync
        doc["sync"] = {
            "stats": s.stats.to_json(timing),
            "witnesses": [_witness_json(w, fn_names, s.full.get(w)) for w in s.witnesses],
            "low_priority": [_witness_json(w, fn_names, s.full.get(w)) for w in s.low_priority],
            "raw": [_witness_json(w, fn_names) for w in s.raw],
        }
    if a.lin is not None:
        issuing = set(oracle_call_functions(a.contract))
        calls = [e for e in a.events if e.fn in issuing]
        doc["lin"] = {
            "stats": a.lin.to_stats(),
            "violations": [_violation_json(v, calls, names) for v in a.lin.violations],
        }
    if timing:
        doc["elapsed_s"] = round(a.elapsed_s, 3)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


def _check(cond: bool, what: str) -> None:
    if not cond:
        raise ReplayMismatch(what)


def replay(doc: dict) -> None:
    """Re-execute every claim in a report; raise :class:`ReplayMismatch` on the first failure."""
    source = doc["contract"]["source"]
    _check(hashlib.sha256(source.encode()).hexdigest() == doc["contract"]["sha256"], "source hash differs")
    contract = parse(source)
    vm = VM(contract)
    scenario = Scenario.from_json(doc["scenario"])
    s0 = snapshot.load_state(contract, doc["initial_state"])
    events = [event_from_json(contract, e) for e in doc["events"]]
    compare = bool(doc["mode"].get("compare_transfers", False))

    for i, j in doc["hb"]["pairs"]:
        fwd = vm.exec_trace(s0, [events[i], events[j]])
        back = vm.exec_trace(s0, [events[j], events[i]])
        _check(fwd.valid and not back.valid, f"hb pair ({i}, {j}) does not hold")

    def run(trace: Sequence[int]):
        out = vm.exec_trace(s0, [events[k] for k in trace])
        return out.valid, output_hash(output_of(out.final, compare))

    def check_witness(w: dict, where: str) -> None:
        _check(sorted(w["trace_a"]) == sorted(w["trace_b"]), f"{where}: traces are not permutations")
        va, ha = run(w["trace_a"])
        vb, hb = run(w["trace_b"])
        _check(va == w["valid_a"] and vb == w["valid_b"], f"{where}: validity differs")
        _check(ha == w["output_a_sha256"], f"{where}: output of trace_a differs")
        _check(hb == w["output_b_sha256"], f"{where}: output of trace_b differs")
        _check(ha != hb, f"{where}: outputs no longer diverge")
        if "full" in w:
            check_witness(w["full"], f"{where} (full)")

    sync = doc.get("sync")
    if sync is not None:
        for section in ("witnesses", "low_priority", "raw"):
            for n, w in enumerate(sync[section]):
                check_witness(w, f"sync.{section}[{n}]")

    lin = doc.get("lin")
    if lin is not None:
        for n, v in enumerate(lin["violations"]):
            where = f"lin.violations[{n}]"
            calls = [event_from_json(contract, e) for e in v["calls"]]
            results = list(v["results"])
            make_cb = lambda q, r: callback_event(scenario, contract, q, r)  # noqa: E731
            for key, order_key, hash_key in (
                ("trace", "order", "output_sha256"),
                ("closest_trace", "closest_order", "closest_output_sha256"),
            ):
                trace = [event_from_json(contract, e) for e in v[key]]
                out = vm.exec_trace(s0, trace, Mode.TOLERANT)
                _check(output_hash(output_of(out.final, compare)) == v[hash_key], f"{where}: {key} output differs")
                symbolic, _ = run_order(vm, s0, calls, results, _parse_steps(v[order_key]), make_cb)
                _check(list(symbolic) == trace, f"{where}: {key} does not match its order")
            _check(is_atomic(_parse_steps(v["closest_order"])), f"{where}: closest order is not atomic")
            canonical = set()
            for o in interleavings(len(calls)):
                if is_atomic(o):
                    _, final = run_order(vm, s0, calls, results, o, make_cb)
                    canonical.add(output_hash(output_of(final, compare)))
            _check(v["output_sha256"] not in canonical, f"{where}: flagged output is canonical")


def verify_report(doc: dict) -> bool:
    """True iff every witness, violation and HB edge in the report reproduces."""
    try:
        replay(doc)
    except (ReplayMismatch, KeyError, ValueError, TypeError):
        return False
    return True
