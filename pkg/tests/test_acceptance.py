"""One test per acceptance criterion; each records a PASS/FAIL line.

The lines are printed as they happen (visible with ``-s``) and repeated in
the terminal summary of every pytest run.
"""

from __future__ import annotations

import itertools
import json
import random
import time

import pytest

from ethracer import corpus
from ethracer.cli import EXIT_BUGS, run_cli
from ethracer.events import callback_event, oracle_call_functions
from ethracer.effects import pure_events_filter
from ethracer.fuzzer import analyze_sync, count_traces, enumerate_traces, run_trace
from ethracer.hb import HBRelation
from ethracer.linearizer import check_lin, interleavings, is_atomic, run_order
from ethracer.report import verify_report
from ethracer.state import Event, Message, output_of
from ethracer.vm import VM, Mode

from conftest import build

RESULTS: list[str] = []
REPORTS: dict[str, dict] = {}


def record(n: str, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def calls_of(s, results):
    return sorted(tuple(s.events.names[i] for i in t) for t in results)


# -- 1 -----------------------------------------------------------------------


def test_criterion_1_por_counts():
    hb = HBRelation.of([(1, 2), (3, 4), (1, 5), (3, 6)])
    start = time.perf_counter()
    with_hb = sum(1 for _ in enumerate_traces(7, hb, 2, 6))
    without = sum(1 for _ in enumerate_traces(7, HBRelation(), 2, 6))
    elapsed = time.perf_counter() - start
    oracle = (count_traces(7, hb, 2, 6), count_traces(7, HBRelation(), 2, 6))
    ok = with_hb == 2560 and without == 8652 and oracle == (2560, 8652) and elapsed < 1.0
    record("1", "POR trace counts", ok, f"{with_hb} with HB, {without} without, oracle {oracle}, {elapsed:.3f}s < 1s")


# -- 2 and 3 --------------------------------------------------------------------


def _iou_report(tmp_path_factory) -> dict:
    if "iou" not in REPORTS:
        path = tmp_path_factory.mktemp("acc") / "iou.json"
        code = run_cli(["analyze", "iou", "--report", str(path), "--jobs", "1"], out=open("/dev/null", "w"))
        assert code == EXIT_BUGS
        REPORTS["iou"] = json.loads(path.read_text())
    return REPORTS["iou"]


def test_criterion_2_erc20_minimized_witness(tmp_path_factory):
    s = build("iou")
    start = time.perf_counter()
    res = analyze_sync(s.vm, s.s0, s.events, s.hb, 2, 6)
    elapsed = time.perf_counter() - start
    ok = len(res.witnesses) == 1
    detail = f"{len(res.raw)} raw -> {len(res.witnesses)} distinct minimized, {elapsed:.2f}s < 60s"
    if ok:
        w = res.witnesses[0]
        seqs = set(w.calls(s.events.names))
        ok = seqs == {("approve", "approve", "transferFrom"), ("approve", "transferFrom", "approve")}
        allowances = []
        for trace in (w.trace_a, w.trace_b):
            final = s.vm.exec_trace(s.s0, [s.events[i] for i in trace]).final
            allowances.append(final.fields["allowed"].read(s.names["O"]).read(s.names["S"]))
        ok = ok and allowances[0] != allowances[1] and elapsed < 60
        detail += f", allowance left {allowances[0]} vs {allowances[1]}"
    _iou_report(tmp_path_factory)
    record("2", "ERC-20 single minimized witness", ok, detail)


def test_criterion_3_hb_extraction():
    s = build("iou")
    expected = {(1, 2), (3, 4), (1, 5), (3, 6)}
    names = s.events.names
    ok = set(s.hb.pairs) == expected and all(names[i] == "approve" and names[j] == "transferFrom" for i, j in s.hb)
    record("3", "HB extraction on IOU", ok, f"got {sorted(s.hb.pairs)}")


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_casino_linearizability(tmp_path_factory):
    s = build("casino")
    issuing = set(oracle_call_functions(s.contract))
    calls = [e for e in s.events if e.fn in issuing]
    make_cb = lambda q, r: callback_event(s.scenario, s.contract, q, r)  # noqa: E731
    start = time.perf_counter()
    res = check_lin(s.vm, s.s0, calls, s.scenario.callback_results, 4, make_callback=make_cb)
    elapsed = time.perf_counter() - start
    flagged = [v for v in res.violations if v.order == (("c", 0), ("c", 1), ("r", 0), ("r", 1))]
    canonical = {
        output_of(run_order(s.vm, s.s0, calls, [0, 0], o, make_cb)[1]) for o in interleavings(2) if is_atomic(o)
    }
    ok = (
        s.s0.balance == 100
        and all(e.msg.value == 1 for e in calls)
        and len(flagged) == 1
        and flagged[0].output not in canonical
        and len(res.violations) == 1
        and elapsed < 30
    )
    path = tmp_path_factory.mktemp("acc") / "casino.json"
    run_cli(["analyze", "casino", "--mode", "lin", "--report", str(path)], out=open("/dev/null", "w"))
    REPORTS["casino"] = json.loads(path.read_text())
    record("4", "Casino interleaved bets flagged", ok, f"{len(res.violations)} violation, {len(canonical)} canonical outputs, {elapsed:.3f}s < 30s")


# -- 5 -----------------------------------------------------------------------


def test_criterion_5_corpus_sync_bugs(tmp_path_factory):
    found = {}
    for name in ("escrow", "contest"):
        s = build(name)
        res = analyze_sync(s.vm, s.s0, s.events, s.hb, s.scenario.min_trace_len, s.scenario.max_trace_len)
        found[name] = [set(w.calls(s.events.names)) for w in res.witnesses]
        path = tmp_path_factory.mktemp("acc") / f"{name}.json"
        run_cli(["analyze", name, "--report", str(path)], out=open("/dev/null", "w"))
        REPORTS[name] = json.loads(path.read_text())
    escrow_ok = {("newEscrow", "setEscrowFee"), ("setEscrowFee", "newEscrow")} in found["escrow"]
    contest_ok = {
        ("participate", "vote", "determineLuckyVoters"),
        ("participate", "determineLuckyVoters", "vote"),
    } in found["contest"]
    record("5", "Escrow and Contest minimal witnesses", escrow_ok and contest_ok, f"escrow {escrow_ok}, contest {contest_ok}")


# -- 6 -----------------------------------------------------------------------


def test_criterion_6_bounty_whb(tmp_path_factory):
    s = build("bounty")
    names = s.events.names
    edges = [(names[i], names[j]) for i, j in s.hb]
    path = tmp_path_factory.mktemp("acc") / "bounty.json"
    run_cli(["analyze", "bounty", "--report", str(path)], out=open("/dev/null", "w"))
    REPORTS["bounty"] = json.loads(path.read_text())
    record("6", "Bounty donate before payout", ("donate", "payout") in edges, f"edges {edges}")


# -- 7 -----------------------------------------------------------------------

PROBE_CONTRACTS = ["iou", "casino", "gamble", "bounty", "escrow", "contest", "constant", "empty"]
UINTS = [0, 1, 2, 3, 5, 50, 100, 1000, 2**256 - 1]


class Prober:
    """Seeded random events and reachable states over the corpus."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.setups = {n: build(n) for n in PROBE_CONTRACTS}

    def event(self, s, fns=None) -> Event:
        rng = self.rng
        f = rng.choice([f for f in s.contract.functions if fns is None or f.name in fns])
        addrs = sorted(s.names.values())
        args = []
        for i, p in enumerate(f.params):
            if f.name == "__callback" and i == 0:
                args.append(rng.randint(0, 3))
            elif p.type.name == "bool":
                args.append(rng.random() < 0.5)
            elif p.type.name == "address":
                args.append(rng.choice(addrs))
            else:
                args.append(rng.choice(UINTS))
        value = rng.choice([0, 0, 1, 5, 1000])
        return Event(f.name, Message(rng.choice(addrs), value, f.name, tuple(args), s.scenario.timestamp, s.scenario.blocknumber))

    def state(self, s, fns=None):
        h = [self.event(s) for _ in range(self.rng.randint(0, 4))]
        return s.vm.exec_trace(s.s0, h, Mode.TOLERANT).final

    def pick(self, names=None):
        return self.setups[self.rng.choice(names or PROBE_CONTRACTS)]


def test_criterion_7a_atomicity():
    p = Prober(1)
    reverts = failures = 0
    for _ in range(1000):
        s = p.pick()
        state = p.state(s)
        before = output_of(state, True)
        out = s.vm.exec_event(state, p.event(s))
        if not out.ok:
            reverts += 1
            failures += output_of(out.state, True) != before
        failures += output_of(state, True) != before
    record("7a", "atomicity over 1000 probes", failures == 0 and reverts > 0, f"{reverts} reverts, {failures} failures")


def test_criterion_7b_determinism():
    p = Prober(2)
    failures = 0
    for _ in range(200):
        s = p.pick()
        h = [p.event(s) for _ in range(p.rng.randint(1, 6))]
        a = s.vm.exec_trace(s.s0, h, Mode.TOLERANT)
        b = VM(s.contract).exec_trace(s.s0, h, Mode.TOLERANT)
        failures += (a.statuses, output_of(a.final, True)) != (b.statuses, output_of(b.final, True))
    record("7b", "replay determinism over 200 traces", failures == 0, f"{failures} failures")


def _relations(n):
    pairs = list(itertools.combinations(range(n), 2))
    for states in itertools.product(range(3), repeat=len(pairs)):
        yield HBRelation.of((a, b) if st == 1 else (b, a) for (a, b), st in zip(pairs, states) if st)


def test_criterion_7c_enumeration_oracle():
    checked = failures = 0
    for n in range(1, 6):
        kmin = min(2, n)
        for rel in _relations(n):
            checked += 1
            failures += sum(1 for _ in enumerate_traces(n, rel, kmin, n)) != count_traces(n, rel, kmin, n)
    rng = random.Random(3)
    for _ in range(100):
        edges = []
        for a, b in itertools.combinations(range(6), 2):
            st = rng.randint(0, 2)
            if st:
                edges.append((a, b) if st == 1 else (b, a))
        rel = HBRelation.of(edges)
        checked += 1
        failures += sum(1 for _ in enumerate_traces(6, rel, 2, 6)) != count_traces(6, rel, 2, 6)
    record("7c", "enumeration matches brute force", failures == 0, f"{checked} relations, {failures} failures")


def test_criterion_7d_witness_soundness():
    checked = failures = 0
    for name in ["iou", "casino", "gamble", "bounty", "escrow", "contest", "constant"]:
        s = build(name)
        res = analyze_sync(s.vm, s.s0, s.events, s.hb, s.scenario.min_trace_len, s.scenario.max_trace_len)
        for w in res.raw + res.witnesses + res.low_priority:
            checked += 1
            oa = run_trace(s.vm, s.s0, s.events, w.trace_a)
            ob = run_trace(s.vm, s.s0, s.events, w.trace_b)
            failures += not (oa is not None and ob is not None and oa != ob and sorted(w.trace_a) == sorted(w.trace_b))
        for small, full in res.full.items():
            failures += not set(small.trace_a) <= set(full.trace_a)
    record("7d", "witness and minimization soundness", failures == 0 and checked > 0, f"{checked} witnesses, {failures} failures")


def test_criterion_7e_purity():
    p = Prober(5)
    with_pure = [n for n in PROBE_CONTRACTS if pure_events_filter(p.setups[n].contract)]
    failures = 0
    for _ in range(500):
        s = p.pick(with_pure)
        state = p.state(s)
        out = s.vm.exec_event(state, p.event(s, pure_events_filter(s.contract)))
        failures += output_of(out.state, True) != output_of(state, True)
    record("7e", "pure functions never change output over 500 probes", failures == 0, f"{failures} failures")


# -- 8 -----------------------------------------------------------------------


def test_criterion_8_replay_round_trip(tmp_path_factory):
    _iou_report(tmp_path_factory)
    missing = {"iou", "casino", "escrow", "contest", "bounty"} - REPORTS.keys()
    for name in missing:
        path = tmp_path_factory.mktemp("acc") / f"{name}.json"
        args = ["analyze", name, "--report", str(path)] + (["--mode", "lin"] if name == "casino" else [])
        run_cli(args, out=open("/dev/null", "w"))
        REPORTS[name] = json.loads(path.read_text())
    verdicts = {name: verify_report(doc) for name, doc in sorted(REPORTS.items())}
    record("8", "reports replay", all(verdicts.values()), ", ".join(f"{k}={v}" for k, v in verdicts.items()))


@pytest.fixture(scope="module", autouse=True)
def _reset():
    RESULTS.clear()
    yield
