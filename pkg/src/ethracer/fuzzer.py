"""Partial-order-reduced trace enumeration and event-ordering bug search."""

from __future__ import annotations

import time
from functools import lru_cache
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, permutations
from math import factorial, perm
from typing import Iterator, Optional, Sequence

from .events import EventSet
from .hb import HBRelation
from .state import WorldState, output_of
from .vm import VM

Trace = tuple[int, ...]

# below this many subsets a process pool costs more than it saves
PARALLEL_MIN_SUBSETS = 256


def trace_key(trace: Sequence[int]) -> Trace:
    """The event set of a trace, as a sorted index tuple."""
    return tuple(sorted(trace))


@dataclass(frozen=True)
class WitnessPair:
    """Two valid orderings of the same events that end in different outputs."""

    trace_a: Trace
    trace_b: Trace
    output_a: bytes = field(repr=False)
    output_b: bytes = field(repr=False)

    @property
    def key(self) -> Trace:
        return trace_key(self.trace_a)

    def calls(self, names: Sequence[str]) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return tuple(names[i] for i in self.trace_a), tuple(names[i] for i in self.trace_b)

    def low_priority(self, names: Sequence[str]) -> bool:
        """Both orders call the same functions in the same order."""
        a, b = self.calls(names)
        return a == b


@dataclass
class FuzzStats:
    traces_enumerated: int = 0
    traces_skipped_by_hb: int = 0
    valid_traces: int = 0
    subsets_visited: int = 0
    witnesses_found: int = 0
    minimized_count: int = 0
    elapsed_s: float = 0.0
    truncated: bool = False

    def to_json(self, timing: bool = False) -> dict:
        doc = {
            "traces_enumerated": self.traces_enumerated,
            "traces_skipped_by_hb": self.traces_skipped_by_hb,
            "valid_traces": self.valid_traces,
            "subsets_visited": self.subsets_visited,
            "witnesses_found": self.witnesses_found,
            "minimized_count": self.minimized_count,
            "truncated": self.truncated,
        }
        if timing:
            doc["elapsed_s"] = round(self.elapsed_s, 3)
        return doc


@dataclass
class FuzzResult:
    witnesses: list[WitnessPair]
    stats: FuzzStats


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def subset_order(n: int, kmin: int, kmax: int, names: Optional[Sequence[str]] = None) -> list[Trace]:
    """Event subsets to explore, in exploration order.

    Subsets whose events call pairwise distinct functions come first; each
    class is in lexicographic order of its sorted index tuple.
    """
    subs = [c for k in range(kmin, min(kmax, n) + 1) for c in combinations(range(n), k)]
    if names is None:
        return sorted(subs)

    def cls(s: Trace) -> int:
        return 0 if len({names[i] for i in s}) == len(s) else 1

    return sorted(subs, key=lambda s: (cls(s), s))


def _restricted_preds(subset: Trace, preds: list[frozenset[int]]) -> dict[int, frozenset[int]]:
    members = frozenset(subset)
    return {j: preds[j] & members for j in subset}


def linear_extensions(subset: Trace, preds: list[frozenset[int]]) -> Iterator[Trace]:
    """HB-respecting orderings of ``subset``, lexicographically."""
    local = _restricted_preds(subset, preds)
    k = len(subset)
    prefix: list[int] = []
    placed: set[int] = set()

    def rec() -> Iterator[Trace]:
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for j in subset:
            if j not in placed and local[j] <= placed:
                prefix.append(j)
                placed.add(j)
                yield from rec()
                placed.discard(j)
                prefix.pop()

    yield from rec()


def enumerate_traces(
    n: int, rel: HBRelation, kmin: int = 2, kmax: int = 6, names: Optional[Sequence[str]] = None
) -> Iterator[Trace]:
    """Every HB-respecting trace over ``k`` distinct events, ``kmin <= k <= kmax``."""
    if kmin < 1 or kmax < kmin:
        raise ValueError("need 1 <= kmin <= kmax")
    preds = rel.predecessors(n)
    for subset in subset_order(n, kmin, kmax, names):
        yield from linear_extensions(subset, preds)


@lru_cache(maxsize=16)
def _violation_masks(n: int, kmin: int, kmax: int) -> tuple[int, ...]:
    """For every k-permutation, a bitmask of the ordered pairs it places backwards."""
    masks = []
    for k in range(kmin, min(kmax, n) + 1):
        for p in permutations(range(n), k):
            m = 0
            for x, y in combinations(p, 2):
                m |= 1 << (y * n + x)  # y comes after x, so the edge y -> x is violated
            masks.append(m)
    return tuple(masks)


def count_traces(n: int, rel: HBRelation, kmin: int = 2, kmax: int = 6) -> int:
    """Brute-force count of HB-respecting traces: every k-permutation is checked against ``rel``."""
    required = 0
    for a, b in rel.pairs:
        required |= 1 << (a * n + b)
    return sum(1 for m in _violation_masks(n, kmin, kmax) if not m & required)


def total_permutations(n: int, kmin: int, kmax: int) -> int:
    return sum(perm(n, k) for k in range(kmin, min(kmax, n) + 1))


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass
class _SubsetResult:
    subset: Trace
    valid: list[tuple[Trace, bytes]]
    enumerated: int
    skipped: int


class _Explorer:
    """Runs all linear extensions of a subset, sharing execution of common prefixes."""

    def __init__(self, vm: VM, s0: WorldState, E: EventSet, rel: HBRelation, compare_transfers: bool):
        self.vm = vm
        self.s0 = s0
        self.events = E.events
        self.preds = rel.predecessors(len(E))
        self.compare_transfers = compare_transfers

    def explore(self, subset: Trace) -> _SubsetResult:
        local = _restricted_preds(subset, self.preds)
        k = len(subset)
        valid: list[tuple[Trace, bytes]] = []
        memo: dict[frozenset[int], int] = {}
        enumerated = 0

        def completions(placed: frozenset[int]) -> int:
            if len(placed) == k:
                return 1
            if placed not in memo:
                memo[placed] = sum(
                    completions(placed | {j}) for j in subset if j not in placed and local[j] <= placed
                )
            return memo[placed]

        def rec(prefix: list[int], placed: frozenset[int], state: WorldState) -> None:
            nonlocal enumerated
            if len(prefix) == k:
                enumerated += 1
                valid.append((tuple(prefix), output_of(state, self.compare_transfers)))
                return
            for j in subset:
                if j in placed or not local[j] <= placed:
                    continue
                out = self.vm.exec_event(state, self.events[j], origin=len(prefix))
                nxt = placed | {j}
                if out.ok:
                    prefix.append(j)
                    rec(prefix, nxt, out.state)
                    prefix.pop()
                else:
                    enumerated += completions(nxt)

        rec([], frozenset(), self.s0)
        return _SubsetResult(subset, valid, enumerated, factorial(k) - enumerated)


def witnesses_for(valid: list[tuple[Trace, bytes]], cap: int, full_pairwise: bool = False) -> list[WitnessPair]:
    """Pairs of valid traces of one event set whose outputs differ.

    By default every trace is compared against the first valid one; with
    ``full_pairwise`` all pairs are compared. At most ``cap`` are kept.
    """
    out: list[WitnessPair] = []
    if not valid:
        return out
    if full_pairwise:
        candidates = combinations(valid, 2)
    else:
        ref = valid[0]
        candidates = ((ref, other) for other in valid[1:])
    for (ta, oa), (tb, ob) in candidates:
        if oa != ob:
            out.append(WitnessPair(ta, tb, oa, ob))
            if len(out) >= cap:
                break
    return out


_WORKER: Optional[_Explorer] = None


def _init_worker(vm, s0, E, rel, compare_transfers) -> None:
    global _WORKER
    _WORKER = _Explorer(vm, s0, E, rel, compare_transfers)


def _work(job: tuple[Trace, Optional[float]]) -> Optional[_SubsetResult]:
    subset, deadline = job
    if deadline is not None and time.monotonic() > deadline:
        return None
    return _WORKER.explore(subset)


def find_eo_bugs(
    vm: VM,
    s0: WorldState,
    E: EventSet,
    rel: HBRelation,
    kmin: int = 2,
    kmax: int = 6,
    *,
    witness_cap: int = 8,
    full_pairwise: bool = False,
    timeout_s: Optional[float] = None,
    max_traces: Optional[int] = None,
    compare_transfers: bool = False,
    jobs: int = 1,
) -> FuzzResult:
    """Search every HB-respecting trace for output-changing reorderings.

    A timeout or ``max_traces`` cap stops exploration between event subsets
    and marks the stats as truncated. Results are identical for any ``jobs``.
    """
    start = time.monotonic()
    deadline = start + timeout_s if timeout_s is not None else None
    subsets = subset_order(len(E), kmin, kmax, E.names)
    stats = FuzzStats()
    witnesses: list[WitnessPair] = []

    def absorb(res: _SubsetResult) -> None:
        stats.subsets_visited += 1
        stats.traces_enumerated += res.enumerated
        stats.traces_skipped_by_hb += res.skipped
        stats.valid_traces += len(res.valid)
        witnesses.extend(witnesses_for(res.valid, witness_cap, full_pairwise))

    if jobs > 1 and max_traces is None and len(subsets) >= PARALLEL_MIN_SUBSETS:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(vm, s0, E, rel, compare_transfers)) as pool:
            chunk = max(1, len(subsets) // (jobs * 8))
            for res in pool.map(_work, [(s, deadline) for s in subsets], chunksize=chunk):
                if res is None:
                    stats.truncated = True
                    continue
                absorb(res)
    else:
        explorer = _Explorer(vm, s0, E, rel, compare_transfers)
        for subset in subsets:
            if deadline is not None and time.monotonic() > deadline:
                stats.truncated = True
                break
            if max_traces is not None and stats.traces_enumerated >= max_traces:
                stats.truncated = True
                break
            absorb(explorer.explore(subset))

    stats.witnesses_found = len(witnesses)
    stats.elapsed_s = time.monotonic() - start
    return FuzzResult(witnesses, stats)


# ---------------------------------------------------------------------------
# Minimization and deduplication
# ---------------------------------------------------------------------------


def run_trace(vm: VM, s0: WorldState, E: EventSet, trace: Sequence[int], compare_transfers: bool = False) -> Optional[bytes]:
    """Output of a trace, or ``None`` if any event reverts."""
    out = vm.exec_trace(s0, [E[i] for i in trace])
    return output_of(out.final, compare_transfers) if out.valid else None


def minimize(vm: VM, s0: WorldState, E: EventSet, w: WitnessPair, compare_transfers: bool = False) -> WitnessPair:
    """Drop shared events while both traces stay valid and still disagree.

    Events are tried left to right by their position in ``trace_a``; passes
    repeat until none can be removed.
    """
    a, b = list(w.trace_a), list(w.trace_b)
    oa, ob = w.output_a, w.output_b
    changed = True
    while changed:
        changed = False
        for ev in list(a):
            if len(a) <= 2:
                break
            if ev not in b:
                continue
            na = [x for x in a if x != ev]
            nb = [x for x in b if x != ev]
            ra = run_trace(vm, s0, E, na, compare_transfers)
            if ra is None:
                continue
            rb = run_trace(vm, s0, E, nb, compare_transfers)
            if rb is None or ra == rb:
                continue
            a, b, oa, ob = na, nb, ra, rb
            changed = True
    return WitnessPair(tuple(a), tuple(b), oa, ob)


def dedupe_witnesses(ws: Sequence[WitnessPair], names: Sequence[str], by: str = "calls") -> list[WitnessPair]:
    """Keep the first witness per equivalence class.

    ``by="calls"`` identifies witnesses whose two orders call the same
    function sequences; ``by="events"`` also requires the same event set.
    Swapped pairs count as the same witness.
    """
    if by not in ("calls", "events"):
        raise ValueError(f"unknown dedupe key {by!r}")
    seen = set()
    out = []
    for w in ws:
        key = frozenset(w.calls(names))
        if by == "events":
            key = (w.key, key)
        if key not in seen:
            seen.add(key)
            out.append(w)
    return out


@dataclass
class SyncAnalysis:
    """Minimized, deduplicated witnesses; ``low_priority`` reorders one function with itself.

    ``full`` maps each minimized witness to the raw witness it was shrunk from.
    """

    witnesses: list[WitnessPair]
    low_priority: list[WitnessPair]
    raw: list[WitnessPair]
    stats: FuzzStats
    full: dict[WitnessPair, WitnessPair] = field(default_factory=dict)


def analyze_sync(
    vm: VM,
    s0: WorldState,
    E: EventSet,
    rel: HBRelation,
    kmin: int = 2,
    kmax: int = 6,
    *,
    dedupe_by: str = "calls",
    compare_transfers: bool = False,
    **kw,
) -> SyncAnalysis:
    """Search, minimize every raw witness, then deduplicate shortest-first."""
    res = find_eo_bugs(vm, s0, E, rel, kmin, kmax, compare_transfers=compare_transfers, **kw)
    full: dict[WitnessPair, WitnessPair] = {}
    for w in res.witnesses:
        full.setdefault(minimize(vm, s0, E, w, compare_transfers), w)
    small = sorted(full, key=lambda w: (len(w.trace_a), w.trace_a, w.trace_b))
    distinct = dedupe_witnesses(small, E.names, dedupe_by)
    high = [w for w in distinct if not w.low_priority(E.names)]
    low = [w for w in distinct if w.low_priority(E.names)]
    res.stats.minimized_count = len(distinct)
    return SyncAnalysis(high, low, res.witnesses, res.stats, {w: full[w] for w in distinct})
