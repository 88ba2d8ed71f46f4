# %% [markdown]
# # Where the 3-cycle average differs from full symmetrization
#
# The average over the 3-cycle group and the average over all six
# permutations can only differ at labels |p><q| whose component is smaller
# under the cycle.  For n = 3 these are the 24 labels whose three pairs
# (p_i, q_i) are all distinct.

# %%
from qconsensus.analysis import (
    classify_consensus,
    empirical_zero_pattern,
    mask_to_text,
    predicted_zero_pattern,
    zero_condition_violations,
)
from qconsensus.perm import PermSet, cycle

s = PermSet([cycle(3)])
pred = predicted_zero_pattern(s)
print(mask_to_text(pred))
print("possibly nonzero entries:", pred.count)

# %% [markdown]
# Random Ginibre states light up exactly the predicted entries.

# %%
emp = empirical_zero_pattern(s, samples=20, threshold=1e-12, seed=0)
print("empirical == predicted:", emp == pred)
print("explicit zero families violated:", {k: len(v) for k, v in zero_condition_violations(pred).items()})

# %%
print(classify_consensus(s))
