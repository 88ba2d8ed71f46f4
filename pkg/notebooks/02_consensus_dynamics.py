# %% [markdown]
# # Consensus dynamics of three qubits
#
# Start from |10+><10+| and let the 3-cycle drive the network.  The state
# converges to the average of its orbit, and every qubit ends in the same
# reduced state [[1/2, 1/6], [1/6, 1/2]].

# %%
import numpy as np

from qconsensus import dynamics, qstate
from qconsensus.dynamics import GeneratorSpec, HamiltonianSpec, propagate, spectral_report
from qconsensus.perm import PermSet, cycle

s = PermSet([cycle(3)])
rho0 = qstate.make_state("10+")
limit = qstate.group_average(rho0, s)
for r in qstate.reduced_states(limit):
    print(r.k, np.round(r.data.real, 6).tolist())

# %% [markdown]
# The decay rate is the spectral gap of the generator, 1 - cos(2 pi / 3) = 1.5.

# %%
rep = spectral_report(GeneratorSpec(s))
print("rate", rep.rate, "null dimension", rep.null_dimension)

# %% [markdown]
# Propagate and watch the pairwise distances between reduced states shrink.

# %%
times = np.linspace(0, 12, 121)
traj = propagate(rho0, GeneratorSpec(s), times)


def pair_sum(state):
    red = [r.data for r in qstate.reduced_states(state)]
    return sum(qstate.trace_distance(red[i], red[j]) for i in range(3) for j in range(i + 1, 3))


d = np.array([pair_sum(x) for x in traj.states])
for t in (0, 2, 4, 8, 12):
    print(f"t={t:>4}: D_sum={d[np.searchsorted(times, t)]:.3e}")
print("fitted rate", dynamics.fit_decay_rate(times, d, 2, 10))

# %% [markdown]
# With a network Hamiltonian that commutes with every permutation the orbit
# rotates, but pairwise distances decay at exactly the same speed for both
# the direct-sum and the tensor-product constructions.

# %%
for kind in ("direct_sum", "tensor_product"):
    g = GeneratorSpec(s, hamiltonian=HamiltonianSpec(kind, qstate.SIGMA_Z))
    tr = propagate(rho0, g, times)
    dk = np.array([pair_sum(x) for x in tr.states])
    print(kind, "fitted rate", round(dynamics.fit_decay_rate(times, dk, 2, 10), 6))
    print("  qubit 1 Bloch at t=12:", np.round(qstate.partial_trace_to_qubit(tr.final, 1).bloch, 4))
