# %% [markdown]
# # Permutations and the three graph layers
#
# A permutation of the qubit labels induces three directed graphs: one on the
# qubits themselves, one on the computational basis kets, and one on the basis
# operators |p><q|.  This walk-through builds all three for the 3-cycle.

# %%
from qconsensus import graphs
from qconsensus.digraph import scc
from qconsensus.perm import PermSet, closure, cycle, cycle_decomposition, swap, union_interaction_graph

pi = cycle(3)  # 1 -> 2 -> 3 -> 1
print("image:", pi, " cycles:", cycle_decomposition(pi))
print("pi^2 :", pi @ pi)

# %% [markdown]
# The subgroup generated by the 3-cycle has three elements; two adjacent
# transpositions already generate all six permutations.

# %%
print(len(closure(PermSet([pi]))), len(closure(PermSet([swap(3, 1, 2), swap(3, 2, 3)]))))

# %% [markdown]
# Interaction graph: arcs i -> pi(i).

# %%
s = PermSet([pi])
print(sorted(union_interaction_graph(s).arcs))

# %% [markdown]
# State-space graph: |x> -> |x o pi>.  The constant strings are fixed and the
# remaining six kets fall into two directed 3-cycles.

# %%
g_state = graphs.state_space_graph(s)
for comp in scc(g_state).components:
    print(comp.size, comp.nodes)

# %% [markdown]
# Operator-space graph: |p><q| -> |p o pi><q o pi|.  It has
# 2^4 * 6 - 6^2 = 60 arcs and 24 components (4 fixed labels, 20 cycles).

# %%
stats = graphs.graph_statistics(s)
print("state arcs", stats.state_arcs, "operator arcs", stats.operator_arcs,
      "operator components", stats.operator_components)
print("size histogram", stats.operator_component_sizes)

# %% [markdown]
# For odd n the single n-cycle has 2 + (2^n - 2)/n state components.

# %%
for n in (3, 5, 7):
    comps = len(scc(graphs.state_space_graph(PermSet([cycle(n)]))))
    print(n, comps, 2 + (2**n - 2) // n)
