"""Event-ordering bug detection for a small Solidity-like contract language.

Typical flow::

    contract = parse(source)
    s0 = scenario.initial_world(contract)
    events = generate_events(contract, scenario, s0)
    rel = extract_whb(VM(contract), s0, events)
    found = analyze_sync(VM(contract), s0, events, rel)
"""

from __future__ import annotations

__version__ = "0.1.0"

from .effects import ReadWriteSet, hb_candidate_pairs, pure_events_filter, rw_set, rw_sets  # noqa: E402
from .events import EventSet, Scenario, generate_events  # noqa: E402
from .fuzzer import (  # noqa: E402
    FuzzStats,
    WitnessPair,
    analyze_sync,
    count_traces,
    dedupe_witnesses,
    enumerate_traces,
    find_eo_bugs,
    minimize,
)
from .hb import HBRelation, extract_whb, independent  # noqa: E402
from .lang import parse  # noqa: E402
from .linearizer import check_lin, is_linearizable, match_call_return  # noqa: E402
from .state import Event, Message, WorldState, output_of  # noqa: E402
from .vm import VM, Mode, exec_event, exec_trace  # noqa: E402

__all__ = [
    "VM", "Event", "EventSet", "FuzzStats", "HBRelation", "Message", "Mode", "ReadWriteSet",
    "Scenario", "WitnessPair", "WorldState", "__version__", "analyze_sync", "check_lin",
    "count_traces", "dedupe_witnesses", "enumerate_traces", "exec_event", "exec_trace",
    "extract_whb", "find_eo_bugs", "generate_events", "hb_candidate_pairs", "independent",
    "is_linearizable", "match_call_return", "minimize", "output_of", "parse",
    "pure_events_filter", "rw_set", "rw_sets",
]
