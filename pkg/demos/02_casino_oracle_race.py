"""Two bets racing through an oracle callback.

The casino checks that it can cover a 100x payout before accepting a bet,
but the payout happens later, in the oracle's callback. When two players
bet before either callback arrives, both bets pass the check and only one
can be paid.

    python demos/02_casino_oracle_race.py
"""

from __future__ import annotations

from ethracer import corpus
from ethracer.events import callback_event, generate_events
from ethracer.linearizer import check_lin
from ethracer.vm import VM, Mode

contract, scenario = corpus.load("casino")
s0 = scenario.initial_world(contract)
names = scenario.address_names
vm = VM(contract)
bets = [e for e in generate_events(contract, scenario, s0) if e.fn == "bet"]
print(f"casino holds {s0.balance}; bets: " + ", ".join(e.label(names) for e in bets))

result = check_lin(
    vm, s0, bets, scenario.callback_results, 4,
    make_callback=lambda qid, r: callback_event(scenario, contract, qid, r),
)
print(f"checked {result.traces_checked} arrangements, {result.canonical_outputs} canonical outcomes")

for v in result.violations:
    for title, trace in (("interleaved", v.trace), ("closest one-at-a-time", v.closest_trace)):
        out = vm.exec_trace(s0, list(trace), Mode.TOLERANT)
        print(f"\n{title}:")
        for e, status in zip(trace, out.statuses):
            print(f"  {e.label(names):40s} {status}")
        paid = {names[to]: amt for to, amt, ok in out.final.transfer_log if ok}
        unpaid = {names[to]: amt for to, amt, ok in out.final.transfer_log if not ok}
        print(f"  casino ends with {out.final.balance}; paid {paid}; failed payouts {unpaid}")
