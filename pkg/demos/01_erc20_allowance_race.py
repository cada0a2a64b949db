"""The approve/transferFrom race in an ERC-20 style token.

The owner O approves spender S for 1 token, then changes its mind and
approves 3. If S sees the change coming, it can spend the old allowance
first and then the new one. This script finds that ordering from scratch.

    python demos/01_erc20_allowance_race.py
"""

from __future__ import annotations

from ethracer import corpus
from ethracer.effects import hb_candidate_pairs, pure_events_filter
from ethracer.events import generate_events
from ethracer.fuzzer import analyze_sync, total_permutations
from ethracer.hb import extract_whb
from ethracer.vm import VM

contract, scenario = corpus.load("iou")
s0 = scenario.initial_world(contract)
names = scenario.address_names

pure = pure_events_filter(contract)
print(f"{contract.name} declares {len(contract.functions)} functions; {len(pure)} touch no state:")
print("  " + ", ".join(sorted(pure)))
print("function pairs that may need ordering:", sorted(hb_candidate_pairs(contract)))

events = generate_events(contract, scenario, s0)
print("\nevents:")
for i, e in enumerate(events):
    print(f"  [{i}] {e.label(names)}")

vm = VM(contract)
rel = extract_whb(vm, s0, events)
print("\nweak happens-before edges (first must precede second):")
for i, j in rel:
    print(f"  {events[i].label(names)}  ->  {events[j].label(names)}")

result = analyze_sync(vm, s0, events, rel, 2, 6)
stats = result.stats
print(f"\nexplored {stats.traces_enumerated} of {total_permutations(len(events), 2, 6)} orderings")
print(f"{stats.witnesses_found} diverging pairs, shrunk and merged into {len(result.witnesses)}:")

owner, spender = scenario.names["O"], scenario.names["S"]
for w in result.witnesses:
    for trace in (w.trace_a, w.trace_b):
        final = vm.exec_trace(s0, [events[i] for i in trace]).final
        left = final.fields["allowed"].read(owner).read(spender)
        spent = final.fields["balances"].read(spender)
        steps = " ; ".join(events[i].label(names) for i in trace)
        print(f"  {steps}\n      -> S holds {spent}, may still spend {left}")

print("\nreordering one approve against another is reported separately:")
for w in result.low_priority:
    print("  ", w.calls(events.names))
