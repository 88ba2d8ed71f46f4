"""State-space and operator-space graphs induced by qubit permutations.

Basis kets ``|p_1 ... p_n>`` are encoded as integers with qubit 1 as the most
significant bit, so ``"100"`` is 4 for n = 3.  A basis operator ``|p><q|`` is
the integer pair ``(p, q)``, i.e. the ``(row, col)`` entry of a density matrix.
Under a permutation ``pi`` the string ``x`` moves to ``x o pi`` with
``(x o pi)_i = x_{pi(i)}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial, prod

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .digraph import (
    Component,
    ComponentReport,
    Digraph,
    connectivity_class,
    is_balanced,
    scc,
    union,
    weak_components,
)
from .errors import ResourceError
from .perm import Permutation, PermSet, union_interaction_graph

__all__ = [
    "Digraph",
    "ComponentReport",
    "scc",
    "weak_components",
    "is_balanced",
    "union",
    "connectivity_class",
    "bitstring",
    "basis_map",
    "state_space_graph",
    "operator_space_graph",
    "operator_component_labels",
    "full_group_signature",
    "full_group_components",
    "cut_flows",
    "GraphStatistics",
    "graph_statistics",
    "full_group_state_arcs",
    "MAX_STATE_QUBITS",
    "MAX_OPERATOR_QUBITS",
]

MAX_STATE_QUBITS = 10
MAX_OPERATOR_QUBITS = 6


def bitstring(x: int, n: int) -> str:
    return format(x, f"0{n}b")


def bit_table(n: int) -> np.ndarray:
    """``bits[x, i]`` is the value of qubit ``i + 1`` in basis state ``x``."""
    x = np.arange(2**n)
    return (x[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


def basis_map(p: Permutation) -> np.ndarray:
    """Integer array ``m`` with ``U_pi |x> = |m[x]>`` on the computational basis."""
    n = p.n
    bits = bit_table(n)
    src = np.array(p.image) - 1
    moved = bits[:, src]
    weights = 1 << (n - 1 - np.arange(n))
    return moved @ weights


def _check_cap(n: int, cap: int, what: str):
    if n > cap:
        raise ResourceError(f"{what} is capped at n <= {cap} qubits (got n={n})")


def state_space_graph(s: PermSet, max_qubits: int = MAX_STATE_QUBITS) -> Digraph:
    """Union over ``s`` of the arcs ``|x> -> |x o pi>`` between distinct basis kets."""
    n = s.n
    _check_cap(n, max_qubits, "state-space graph")
    labels = [bitstring(x, n) for x in range(2**n)]
    arcs = set()
    for p in s:
        m = basis_map(p)
        for x in np.flatnonzero(m != np.arange(2**n)):
            arcs.add((labels[x], labels[m[x]]))
    return Digraph(tuple(labels), frozenset(arcs))


def operator_space_graph(s: PermSet, max_qubits: int = MAX_OPERATOR_QUBITS) -> Digraph:
    """Union over ``s`` of the arcs ``(p, q) -> (p o pi, q o pi)`` between distinct labels."""
    n = s.n
    _check_cap(n, max_qubits, "operator-space graph")
    d = 2**n
    nodes = tuple((r, c) for r in range(d) for c in range(d))
    arcs = set()
    for p in s:
        m = basis_map(p).tolist()
        for r in range(d):
            mr = m[r]
            for c in range(d):
                if mr != r or m[c] != c:
                    arcs.add(((r, c), (mr, m[c])))
    return Digraph(nodes, frozenset(arcs))


def operator_component_labels(s: PermSet, max_qubits: int | None = None) -> tuple[int, np.ndarray]:
    """Component index of every operator label, as a ``(2^n, 2^n)`` integer array.

    Vectorized counterpart of ``scc(operator_space_graph(s))``: since every
    permutation-induced graph is balanced, weak and strong components coincide.
    Components are numbered in order of their smallest row-major label.
    """
    n = s.n
    if max_qubits is not None:
        _check_cap(n, max_qubits, "operator-space components")
    d = 2**n
    size = d * d
    flat = np.arange(size)
    rows, cols = [], []
    for p in s:
        m = basis_map(p)
        target = (m[:, None] * d + m[None, :]).ravel()
        rows.append(flat)
        cols.append(target)
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=int)
    adj = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(size, size)).tocsr()
    count, raw = connected_components(adj, directed=True, connection="weak")
    # renumber by first appearance so output is independent of scipy's ordering
    _, first = np.unique(raw, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(count, dtype=int)
    relabel[order] = np.arange(count)
    return count, relabel[raw].reshape(d, d)


def full_group_signature(n: int) -> np.ndarray:
    """Pair-multiset signature of every label ``(p, q)`` under the full group.

    Returns a ``(2^n, 2^n, 4)`` array counting how many qubits carry each of
    the pairs ``(p_i, q_i)`` in ``00, 01, 10, 11``.
    """
    bits = bit_table(n)
    pair = 2 * bits[:, None, :] + bits[None, :, :]
    return np.stack([(pair == v).sum(axis=-1) for v in range(4)], axis=-1)


def full_group_labels(n: int) -> tuple[int, np.ndarray]:
    """Component index of every operator label under all ``n!`` permutations."""
    sig = full_group_signature(n)
    d = 2**n
    flat = sig.reshape(d * d, 4)
    _, first, inv = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(first)
    relabel = np.empty(len(first), dtype=int)
    relabel[order] = np.arange(len(first))
    return len(first), relabel[inv].reshape(d, d)


def multinomial_size(signature) -> int:
    counts = [int(c) for c in signature]
    return factorial(sum(counts)) // prod(factorial(c) for c in counts)


def full_group_components(n: int) -> ComponentReport:
    """Operator-space components of the full permutation group, without enumerating it.

    Two labels share a component exactly when their pair multisets agree; each
    component is complete, so it carries ``size * (size - 1)`` arcs.
    """
    if n < 1:
        raise ValueError("n must be positive")
    count, labels = full_group_labels(n)
    d = 2**n
    members: list[list] = [[] for _ in range(count)]
    for r in range(d):
        for c in range(d):
            members[labels[r, c]].append((r, c))
    comps = []
    for block in members:
        size = len(block)
        comps.append(Component(tuple(block), size * (size - 1), True, size == 2))
    return ComponentReport(tuple(comps))


def full_group_state_arcs(n: int) -> int:
    """Arc count of the state-space graph of the full group (complete Hamming-weight classes)."""
    return sum(comb(n, k) * (comb(n, k) - 1) for k in range(1, n))


def cut_flows(s: PermSet, subset, weights=None) -> tuple[float, float]:
    """Weighted arc flow out of and into a set of operator labels.

    ``subset`` holds flat labels ``row * 2^n + col``.  Each permutation
    contributes ``w`` per label it moves across the cut, counted separately
    for every permutation, so the two totals always agree.
    """
    d = 2**s.n
    inside = np.zeros(d * d, dtype=bool)
    inside[np.asarray(list(subset), dtype=int)] = True
    out_flow = in_flow = 0.0
    for i, p in enumerate(s):
        w = 1.0 if weights is None else float(weights[i])
        m = basis_map(p)
        target = (m[:, None] * d + m[None, :]).ravel()
        out_flow += w * np.count_nonzero(inside & ~inside[target])
        in_flow += w * np.count_nonzero(~inside & inside[target])
    return out_flow, in_flow


@dataclass(frozen=True)
class GraphStatistics:
    n: int
    interaction_arcs: int
    interaction_connectivity: str
    state_arcs: int
    state_components: int
    state_component_sizes: dict
    operator_arcs: int
    operator_components: int
    operator_component_sizes: dict
    per_permutation: tuple  # (perm, state arcs, operator arcs, identity holds)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "interaction": {
                "arcs": self.interaction_arcs,
                "connectivity": self.interaction_connectivity,
            },
            "state_space": {
                "arcs": self.state_arcs,
                "components": self.state_components,
                "component_sizes": {str(k): v for k, v in self.state_component_sizes.items()},
            },
            "operator_space": {
                "arcs": self.operator_arcs,
                "components": self.operator_components,
                "component_sizes": {str(k): v for k, v in self.operator_component_sizes.items()},
            },
            "arc_identity": [
                {
                    "permutation": str(p),
                    "state_arcs": sa,
                    "operator_arcs": oa,
                    "predicted_operator_arcs": 2 ** (self.n + 1) * sa - sa**2,
                    "holds": ok,
                }
                for p, sa, oa, ok in self.per_permutation
            ],
        }


def graph_statistics(
    s: PermSet,
    max_state_qubits: int = MAX_STATE_QUBITS,
    max_operator_qubits: int = MAX_OPERATOR_QUBITS,
) -> GraphStatistics:
    """Arc and component counts of all three graph layers of ``s``.

    Also checks, for every member, that the operator-space arc count equals
    ``2^(n+1) m - m^2`` with ``m`` its state-space arc count.
    """
    n = s.n
    g_int = union_interaction_graph(s)
    g_state = state_space_graph(s, max_state_qubits)
    g_op = operator_space_graph(s, max_operator_qubits)
    state_rep = scc(g_state)
    op_rep = scc(g_op)
    per = []
    for p in s:
        single = PermSet([p])
        sa = len(state_space_graph(single, max_state_qubits).arcs)
        oa = len(operator_space_graph(single, max_operator_qubits).arcs)
        per.append((p, sa, oa, oa == 2 ** (n + 1) * sa - sa**2))
    return GraphStatistics(
        n=n,
        interaction_arcs=len(g_int.arcs),
        interaction_connectivity=connectivity_class(g_int),
        state_arcs=len(g_state.arcs),
        state_components=len(state_rep),
        state_component_sizes=state_rep.size_histogram(),
        operator_arcs=len(g_op.arcs),
        operator_components=len(op_rep),
        operator_component_sizes=op_rep.size_histogram(),
        per_permutation=tuple(per),
    )
