"""Simple directed graphs with component and balance queries."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class Digraph:
    """Simple digraph: no self-loops, at most one arc per ordered pair."""

    nodes: tuple
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "arcs", frozenset(self.arcs))
        node_set = set(self.nodes)
        problems = []
        if len(node_set) != len(self.nodes):
            problems.append("duplicate node labels")
        for u, v in self.arcs:
            if u == v:
                problems.append(f"self-loop at {u!r}")
            elif u not in node_set or v not in node_set:
                problems.append(f"arc ({u!r}, {v!r}) leaves the node set")
        if problems:
            raise ValidationError(problems[:5], what="digraph")

    def __len__(self) -> int:
        return len(self.nodes)

    def sorted_arcs(self) -> list:
        """Arcs ordered by the positions of their endpoints in ``nodes``."""
        pos = {v: i for i, v in enumerate(self.nodes)}
        return sorted(self.arcs, key=lambda a: (pos[a[0]], pos[a[1]]))

    def successors(self) -> dict:
        out = {v: [] for v in self.nodes}
        for u, v in self.sorted_arcs():
            out[u].append(v)
        return out

    def predecessors(self) -> dict:
        inc = {v: [] for v in self.nodes}
        for u, v in self.sorted_arcs():
            inc[v].append(u)
        return inc

    def out_degree(self) -> Counter:
        return Counter(u for u, _ in self.arcs)

    def in_degree(self) -> Counter:
        return Counter(v for _, v in self.arcs)

    def subgraph(self, keep: Iterable[Hashable]) -> "Digraph":
        keep = set(keep)
        nodes = tuple(v for v in self.nodes if v in keep)
        return Digraph(nodes, frozenset((u, v) for u, v in self.arcs if u in keep and v in keep))


@dataclass(frozen=True)
class Component:
    nodes: tuple
    arc_count: int
    strongly_connected: bool
    is_directed_cycle: bool

    @property
    def size(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class ComponentReport:
    """A partition of a node set into components, with per-component statistics."""

    components: tuple[Component, ...]

    def __len__(self) -> int:
        return len(self.components)

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.components]

    def size_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.sizes).items()))

    def partition(self) -> frozenset:
        """The partition as a set of frozensets, for order-free comparison."""
        return frozenset(frozenset(c.nodes) for c in self.components)

    def membership(self) -> dict:
        return {v: i for i, c in enumerate(self.components) for v in c.nodes}


def _report(g: Digraph, blocks: Sequence[Sequence]) -> ComponentReport:
    index = {v: i for i, block in enumerate(blocks) for v in block}
    inner: list[set] = [set() for _ in blocks]
    for u, v in g.arcs:
        if index[u] == index[v]:
            inner[index[u]].add((u, v))
    comps = []
    for block, arcs in zip(blocks, inner):
        block = tuple(block)
        strong = len(block) == 1 or len(scc(Digraph(block, arcs), _stats=False)) == 1
        m = len(arcs)
        # strongly connected with exactly one arc per node means a single cycle
        cycle = len(block) >= 2 and strong and m == len(block)
        comps.append(Component(block, m, strong, cycle))
    return ComponentReport(tuple(comps))


def scc(g: Digraph, _stats: bool = True) -> ComponentReport | list:
    """Strongly connected components (iterative Tarjan).

    Components are listed in order of their first node in ``g.nodes``, with
    nodes inside a component kept in ``g.nodes`` order.
    """
    succ = g.successors()
    order = {v: i for i, v in enumerate(g.nodes)}
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    blocks = []
    counter = 0
    for root in g.nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                block = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    block.append(w)
                    if w == v:
                        break
                blocks.append(sorted(block, key=order.__getitem__))
    blocks.sort(key=lambda b: order[b[0]])
    if not _stats:
        return blocks
    return _report(g, blocks)


def weak_components(g: Digraph) -> ComponentReport:
    parent = {v: v for v in g.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.arcs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict = {}
    for v in g.nodes:
        groups.setdefault(find(v), []).append(v)
    return _report(g, list(groups.values()))


def is_balanced(g: Digraph) -> bool:
    out_deg, in_deg = g.out_degree(), g.in_degree()
    return all(out_deg[v] == in_deg[v] for v in g.nodes)


def union(gs: Sequence[Digraph]) -> Digraph:
    gs = list(gs)
    if not gs:
        raise ValueError("union of an empty list of graphs")
    nodes = gs[0].nodes
    for g in gs[1:]:
        if set(g.nodes) != set(nodes):
            raise ValueError("union requires identical node sets")
    arcs = frozenset().union(*(g.arcs for g in gs))
    return Digraph(nodes, arcs)


def is_strongly_connected(g: Digraph) -> bool:
    return len(g.nodes) <= 1 or len(scc(g, _stats=False)) == 1


def _reachable(succ: dict, root) -> set:
    seen = {root}
    todo = [root]
    while todo:
        v = todo.pop()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def connectivity_class(g: Digraph) -> str:
    """Strongest of: fully, strongly, quasi-strongly, weakly connected, or disconnected."""
    n = len(g.nodes)
    if n <= 1 or len(g.arcs) == n * (n - 1):
        return "fully"
    if is_strongly_connected(g):
        return "strongly"
    succ = g.successors()
    if any(len(_reachable(succ, v)) == n for v in g.nodes):
        return "quasi-strongly"
    if len(weak_components(g)) == 1:
        return "weakly"
    return "disconnected"


def cut_degrees(g: Digraph, subset: Iterable[Hashable]) -> tuple[int, int]:
    """Number of outside nodes reached from ``subset`` and reaching into it.

    Equal for the graph of a single permutation, but not in general for a
    union of several; use ``graphs.cut_flows`` for the weighted balance.
    """
    s = set(subset)
    out_nbrs = {v for u, v in g.arcs if u in s and v not in s}
    in_nbrs = {u for u, v in g.arcs if v in s and u not in s}
    return len(out_nbrs), len(in_nbrs)
