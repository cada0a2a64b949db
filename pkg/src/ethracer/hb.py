"""Weak happens-before extraction over a concrete event set."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional

from .effects import hb_candidate_pairs
from .events import EventSet
from .state import WorldState
from .vm import VM


@dataclass(frozen=True)
class HBRelation:
    """Edges ``(a, b)`` meaning event ``a`` must precede event ``b``."""

    pairs: frozenset[tuple[int, int]] = frozenset()

    def __contains__(self, edge) -> bool:
        return edge in self.pairs

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def predecessors(self, n: int) -> list[frozenset[int]]:
        preds: list[set[int]] = [set() for _ in range(n)]
        for a, b in self.pairs:
            preds[b].add(a)
        return [frozenset(p) for p in preds]

    def to_json(self) -> list[list[int]]:
        return [[a, b] for a, b in sorted(self.pairs)]

    @classmethod
    def of(cls, edges: Iterable[tuple[int, int]]) -> "HBRelation":
        return cls(frozenset((int(a), int(b)) for a, b in edges))


def independent(i: int, j: int, rel: HBRelation) -> bool:
    return (i, j) not in rel and (j, i) not in rel


def probe_pairs(E: EventSet, fn_pairs: Optional[set[tuple[str, str]]]) -> list[tuple[int, int]]:
    """Unordered index pairs ``i < j`` to probe for weak happens-before.

    Every pair whose functions form a candidate pair is probed, except that
    two events which both exist only through declared scenario pairs are
    probed only if they were declared together.
    """
    declared = {tuple(sorted(p)) for p in E.declared_pairs}
    out = []
    for i, j in combinations(range(len(E)), 2):
        if fn_pairs is not None and tuple(sorted((E[i].fn, E[j].fn))) not in fn_pairs:
            continue
        if i in E.pair_only and j in E.pair_only and (i, j) not in declared:
            continue
        out.append((i, j))
    return out


def extract_whb(vm: VM, s0: WorldState, E: EventSet, candidates: Optional[set[tuple[str, str]]] = None) -> HBRelation:
    """Edge ``(a, b)`` iff ``[a, b]`` runs cleanly from ``s0`` and ``[b, a]`` does not.

    ``candidates`` defaults to the static candidate pairs of the VM's contract.
    """
    if candidates is None:
        candidates = hb_candidate_pairs(vm.contract)
    first: dict[int, object] = {}

    def after(i: int):
        if i not in first:
            first[i] = vm.exec_event(s0, E[i])
        return first[i]

    def valid(a: int, b: int) -> bool:
        out = after(a)
        return out.ok and vm.exec_event(out.state, E[b]).ok

    edges = set()
    for i, j in probe_pairs(E, candidates):
        ij, ji = valid(i, j), valid(j, i)
        if ij and not ji:
            edges.add((i, j))
        elif ji and not ij:
            edges.add((j, i))
    return HBRelation(frozenset(edges))
