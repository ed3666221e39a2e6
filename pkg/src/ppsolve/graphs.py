"""Graph algorithms used by the structural analyses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


def tarjan_sccs(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Strongly connected components, iteratively, in reverse topological
    order (every component appears after the components it depends on)."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(sorted(comp))
    return sccs


def bottom_sccs(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Components with no edges leaving them."""
    out = []
    for comp in tarjan_sccs(adj):
        members = set(comp)
        if all(w in members for v in comp for w in adj[v]):
            out.append(comp)
    return out


def reachable_to(adj: Sequence[Sequence[int]], targets: Iterable[int]) -> set[int]:
    """Variables that are in `targets` or can reach one along edges."""
    n = len(adj)
    reverse: list[list[int]] = [[] for _ in range(n)]
    for v, children in enumerate(adj):
        for w in children:
            reverse[w].append(v)
    seen = set()
    frontier = [t for t in targets]
    while frontier:
        v = frontier.pop()
        if v in seen:
            continue
        seen.add(v)
        frontier.extend(reverse[v])
    return seen


@dataclass
class AttractorResult:
    in_set: set[int]
    added_at: dict[int, int]  # addition timestamps, targets first
    trigger: dict[int, int]   # OR node -> successor justifying its addition

    def order(self) -> list[int]:
        return sorted(self.added_at, key=self.added_at.get)


def and_or_reach(
    nodes: Iterable[int],
    successors: Callable[[int], Sequence[int]],
    targets: Iterable[int],
    is_and: Callable[[int], bool],
) -> AttractorResult:
    """Smallest set containing the targets and closed under: an OR node
    joins when some successor is in, an AND node when all successors are.

    Nodes are scanned in ascending order until a fixpoint, so addition
    timestamps (and hence recorded triggers) are deterministic.  The
    trigger of an OR node is the in-set successor with the earliest
    addition, ties broken by lower index.
    """
    node_list = sorted(set(nodes))
    in_set: set[int] = set()
    added_at: dict[int, int] = {}
    trigger: dict[int, int] = {}
    clock = 0
    for t in sorted(set(targets)):
        in_set.add(t)
        added_at[t] = clock
        clock += 1
    changed = True
    while changed:
        changed = False
        for v in node_list:
            if v in in_set:
                continue
            succ = [w for w in successors(v)]
            if not succ:
                continue
            if is_and(v):
                if all(w in in_set for w in succ):
                    in_set.add(v)
                    added_at[v] = clock
                    clock += 1
                    changed = True
            else:
                candidates = [w for w in succ if w in in_set]
                if candidates:
                    best = min(candidates, key=lambda w: (added_at[w], w))
                    in_set.add(v)
                    added_at[v] = clock
                    trigger[v] = best
                    clock += 1
                    changed = True
    return AttractorResult(in_set, added_at, trigger)
