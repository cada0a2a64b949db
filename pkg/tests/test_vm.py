from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ethracer.lang import parse
from ethracer.state import WORD, Event, WorldState, output_of
from ethracer.vm import LOOP_CAP, NOT_RUN, OK, VM, MalformedEvent, Mode, Reason, UnknownFunction, exec_trace

from strategies import contract_and_trace, events_for, loaded

A1, A2 = 0xA1, 0xA2

COUNTER = """
contract Counter {
    uint256 n;
    uint256[] xs;
    mapping(address => mapping(address => uint256)) m;

    function add(uint256 v) { n += v; }
    function sub(uint256 v) { n -= v; }
    function div(uint256 v) { n = n / v; }
    function push(uint256 v) { xs.push(v); }
    function at(uint256 i) { n = xs[i]; }
    function nested(address a) { m[msg.sender][a] += 1; }
    function loop(uint256 k) { for (i in 0 .. k) { n += 1; } }
    function deposit() payable { n = msg.value; }
    function fail() { n = 99; throw; }
    function guarded(uint256 v) { n = v; require(v > 10); }
    function pay(address to, uint256 v) { send(to, v); }
}
"""


@pytest.fixture(scope="module")
def vm():
    return VM(parse(COUNTER))


@pytest.fixture()
def s0(vm):
    return WorldState.initial(vm.contract, balance=10, ext_balances={A1: 100})


def call(fn, *args, sender=A1, value=0):
    return Event.call(fn, sender, *args, value=value)


def test_uint_arithmetic_wraps(vm, s0):
    out = vm.exec_event(s0, call("sub", 1))
    assert out.ok and out.state.fields["n"] == WORD - 1
    out = vm.exec_event(out.state, call("add", 2))
    assert out.state.fields["n"] == 1


@pytest.mark.parametrize(
    "event, reason",
    [
        (call("div", 0), Reason.DIV_BY_ZERO),
        (call("at", 0), Reason.INDEX_OOB),
        (call("loop", LOOP_CAP + 1), Reason.LOOP_CAP),
        (call("add", 1, value=1), Reason.NON_PAYABLE_VALUE),
        (call("deposit", value=101), Reason.INSUFFICIENT_FUNDS),
        (call("fail"), Reason.EXPLICIT_THROW),
        (call("guarded", 3), Reason.REQUIRE_FAILED),
    ],
)
def test_revert_reasons_roll_back(vm, s0, event, reason):
    before = output_of(s0)
    out = vm.exec_event(s0, event)
    assert out.reason == reason
    assert out.state is s0
    assert output_of(out.state) == before


def test_loop_at_cap_runs(vm, s0):
    out = vm.exec_event(s0, call("loop", LOOP_CAP))
    assert out.ok and out.state.fields["n"] == LOOP_CAP


def test_payable_credits_contract(vm, s0):
    out = vm.exec_event(s0, call("deposit", value=7))
    assert out.ok
    assert out.state.balance == 17
    assert out.state.ext_balances[A1] == 93
    assert out.state.total_ether() == s0.total_ether()


def test_send_never_reverts(vm, s0):
    out = vm.exec_event(s0, call("pay", A2, 50))
    assert out.ok
    assert out.state.balance == 10
    assert out.state.transfer_log == ((A2, 50, False),)
    out = vm.exec_event(out.state, call("pay", A2, 4))
    assert out.state.balance == 6 and out.state.ext_balances[A2] == 4


def test_transfer_log_only_counts_when_asked(vm, s0):
    out = vm.exec_event(s0, call("pay", A2, 50))
    assert output_of(out.state) == output_of(s0)
    assert output_of(out.state, compare_transfers=True) != output_of(s0, compare_transfers=True)


def test_nested_mapping_write_and_zero_default(vm, s0):
    out = vm.exec_event(s0, call("nested", A2))
    assert out.state.fields["m"][A1][A2] == 1
    assert s0.fields["m"].read(A1).read(A2) == 0


def test_zero_writes_do_not_change_output(vm, s0):
    s = s0.clone()
    s.fields["m"].slot(A1)[A2] = 0
    assert output_of(s) == output_of(s0)


def test_strict_and_tolerant_modes(vm, s0):
    h = [call("add", 1), call("guarded", 3), call("add", 2)]
    strict = vm.exec_trace(s0, h, Mode.STRICT)
    assert strict.statuses == [OK, "RequireFailed", NOT_RUN]
    assert not strict.valid and strict.final.fields["n"] == 1
    tolerant = vm.exec_trace(s0, h, Mode.TOLERANT)
    assert tolerant.statuses == [OK, "RequireFailed", OK]
    assert tolerant.final.fields["n"] == 3


def test_malformed_and_unknown_events(vm, s0):
    with pytest.raises(UnknownFunction):
        vm.exec_event(s0, call("nope"))
    with pytest.raises(MalformedEvent):
        vm.exec_event(s0, call("add"))
    with pytest.raises(MalformedEvent):
        vm.exec_event(s0, call("add", WORD))
    with pytest.raises(MalformedEvent):
        vm.exec_event(s0, call("add", True))


def test_callback_consumes_pending_query():
    c, sc, s0 = loaded("casino")
    vm = VM(c)
    p1 = sc.names["P1"]
    oracle = sc.names[sc.oracle_name]
    bet = Event.call("bet", p1, value=1)
    out = vm.exec_event(s0, bet)
    assert out.issued == (1,)
    assert out.state.pending_queries == {1: (-1, ())}
    cb = Event.call("__callback", oracle, 1, 0)
    done = vm.exec_event(out.state, cb)
    assert done.ok and done.state.pending_queries == {}
    assert done.state.ext_balances[p1] == 9 + 100
    again = vm.exec_event(done.state, cb)
    assert again.reason == Reason.REQUIRE_FAILED


# -- properties --------------------------------------------------------------


@st.composite
def state_and_event(draw):
    name, prefix = draw(contract_and_trace(max_len=4))
    contract, _, s0 = loaded(name)
    vm = VM(contract)
    state = vm.exec_trace(s0, prefix, Mode.TOLERANT).final
    return vm, state, draw(events_for(name))


@settings(max_examples=1000)
@given(state_and_event())
def test_atomicity(probe):
    vm, state, e = probe
    before = output_of(state, compare_transfers=True)
    snapshot = (state.balance, dict(state.ext_balances), dict(state.pending_queries), state.next_qid)
    out = vm.exec_event(state, e)
    if not out.ok:
        assert output_of(out.state, compare_transfers=True) == before
        assert out.state is state
    # the input state is never mutated, revert or not
    assert output_of(state, compare_transfers=True) == before
    assert (state.balance, state.ext_balances, state.pending_queries, state.next_qid) == snapshot


@settings(max_examples=200)
@given(contract_and_trace())
def test_replay_determinism(case):
    name, trace = case
    contract, _, s0 = loaded(name)
    for mode in Mode:
        a = exec_trace(contract, s0, trace, mode)
        b = exec_trace(contract, s0, trace, mode)
        assert a.statuses == b.statuses and a.issued == b.issued
        assert output_of(a.final, True) == output_of(b.final, True)


@settings(max_examples=200)
@given(contract_and_trace())
def test_ether_is_conserved(case):
    name, trace = case
    contract, _, s0 = loaded(name)
    final = exec_trace(contract, s0, trace, Mode.TOLERANT).final
    assert final.total_ether() == s0.total_ether()
