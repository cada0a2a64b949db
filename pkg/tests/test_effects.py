from __future__ import annotations

from itertools import combinations

from hypothesis import given, settings
from hypothesis import strategies as st

from ethracer.effects import BALANCE, ORACLE, hb_candidate_pairs, pure_events_filter, rw_set, rw_sets
from ethracer.lang import parse
from ethracer.state import output_of
from ethracer.vm import VM, Mode

from strategies import CONTRACTS, contract_and_trace, events_for, loaded


def test_iou_rw_sets():
    c, _, _ = loaded("iou")
    sets = rw_sets(c)
    assert sets["approve"].reads == frozenset()
    assert sets["approve"].writes == {"allowed"}
    assert sets["transfer"].reads == {"balances"}
    assert sets["transfer"].writes == {"balances"}
    assert sets["transferFrom"].reads == {"balances", "allowed"}
    assert sets["transferFrom"].writes == {"balances", "allowed"}


def test_iou_has_three_non_pure_functions_of_eleven():
    c, _, _ = loaded("iou")
    pure = pure_events_filter(c)
    live = [f.name for f in c.functions if f.name not in pure]
    assert len(c.functions) == 11
    assert live == ["transfer", "approve", "transferFrom"]
    # pairs of distinct functions left to consider: 3 instead of 55
    assert len(list(combinations(live, 2))) == 3
    assert len(list(combinations(c.functions, 2))) == 55


def test_iou_candidate_pairs():
    c, _, _ = loaded("iou")
    assert hb_candidate_pairs(c) == {
        ("approve", "transferFrom"),
        ("transfer", "transferFrom"),
        ("transfer", "transfer"),
        ("transferFrom", "transferFrom"),
    }


def test_casino_pseudo_fields():
    c, _, _ = loaded("casino")
    bet = rw_set(c.function("bet"), c.field_names)
    assert bet.reads == {BALANCE}
    assert bet.writes == {"bets", "players", ORACLE, BALANCE}
    cb = rw_set(c.function("__callback"), c.field_names)
    assert {ORACLE, "bets", "players"} <= cb.reads
    assert {ORACLE, BALANCE} <= cb.writes


def test_index_expressions_in_targets_are_reads():
    c = parse("contract C { mapping(uint256 => uint256) m; uint256 k; function f() { m[k] = 1; } }")
    rw = rw_set(c.function("f"), c.field_names)
    assert rw.reads == {"k"} and rw.writes == {"m"}


def test_payable_function_is_never_pure():
    c = parse("contract C { function f() payable {} function g() {} }")
    assert pure_events_filter(c) == {"g"}


def test_locals_do_not_count():
    c = parse("contract C { function f(uint256 a) returns (uint256) { uint256 b = a * 2; b += 1; return b; } }")
    assert pure_events_filter(c) == {"f"}


def test_disjoint_functions_are_not_candidates():
    c = parse("contract C { uint256 x; uint256 y; function f() { x = 1; } function g() { y = 2; } }")
    assert hb_candidate_pairs(c) == set()


def test_readers_only_are_not_candidates():
    c = parse("contract C { uint256 x; bool b; function f() { require(x > 0); } function g() { b = x == 1; } }")
    assert hb_candidate_pairs(c) == set()


# -- properties --------------------------------------------------------------

PURE_CONTRACTS = [n for n in CONTRACTS if pure_events_filter(loaded(n)[0])] + ["empty"]


@st.composite
def pure_probe(draw):
    name = draw(st.sampled_from(PURE_CONTRACTS))
    contract, _, s0 = loaded(name)
    pure = pure_events_filter(contract)
    prefix = draw(st.lists(events_for(name), max_size=4))
    vm = VM(contract)
    state = vm.exec_trace(s0, prefix, Mode.TOLERANT).final
    e = draw(events_for(name).filter(lambda ev: ev.fn in pure))
    return vm, state, e


@settings(max_examples=500)
@given(pure_probe())
def test_pure_functions_never_change_output(probe):
    vm, state, e = probe
    out = vm.exec_event(state, e)
    assert output_of(out.state, compare_transfers=True) == output_of(state, compare_transfers=True)
    assert out.state.pending_queries == state.pending_queries


@settings(max_examples=200)
@given(contract_and_trace(max_len=4), st.data())
def test_rw_sets_over_approximate_writes(case, data):
    name, prefix = case
    contract, _, s0 = loaded(name)
    vm = VM(contract)
    state = vm.exec_trace(s0, prefix, Mode.TOLERANT).final
    e = data.draw(events_for(name))
    out = vm.exec_event(state, e)
    written = rw_sets(contract)[e.fn].writes
    for field, value in state.fields.items():
        if field not in written:
            assert out.state.fields[field] == value
    if BALANCE not in written:
        assert out.state.balance == state.balance
