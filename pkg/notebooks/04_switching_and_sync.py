# %% [markdown]
# # Switching interactions
#
# Only permutations that stay active forever decide the limit.  A swap used
# once at the start leaves a trace in the final state, but the state still
# ends up invariant under the persistent 3-cycle only.

# %%
from qconsensus import qstate
from qconsensus.dynamics import SwitchingSchedule, propagate_switching
from qconsensus.perm import PermSet, cycle, swap

rho0 = qstate.make_state("10+")
c3 = PermSet([cycle(3)])
idle = PermSet([], n=3)

periodic = SwitchingSchedule(3, period=((1.0, c3), (1.0, idle)))
res = propagate_switching(rho0, periodic, 40.0)
print(res.verdict, qstate.trace_distance(res.trajectory.final, res.predicted_limit))

# %%
prefixed = SwitchingSchedule(3, prefix=((1.0, PermSet([swap(3, 1, 2)])),), period=((1.0, c3),))
res = propagate_switching(rho0, prefixed, 40.0)
final = res.trajectory.final
print(res.verdict, "closure sizes", res.persistent_closure_size, res.total_closure_size)
print("distance to total average     ", round(qstate.trace_distance(final, res.total_average), 4))
print("distance to persistent average", round(qstate.trace_distance(final, res.predicted_limit), 4))
print("distance to tail limit        ", qstate.trace_distance(final, res.tail_limit))
