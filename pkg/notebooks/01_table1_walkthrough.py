# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Five researchers, five workers
#
# Worker 1 answers every affiliation correctly.  Workers 4 and 5 copy from
# worker 3, typo included, so a plain vote hands three tasks to the copied value.

# %%
import numpy as np

from imc2 import Params, precision, run_date, run_mv, table1_instance

inst = table1_instance()
for t in inst.tasks:
    print(f"{t.task_id:12s}", [w.values[t.task_id][0] for w in inst.workers])

# %% [markdown]
# Majority vote with edit-distance merging (rho = 0.5) picks the copied
# values for Dewitt, Carey and Halevy.

# %%
mv = run_mv(inst.public(), "edit", 0.5)
print(mv.values, precision(mv, inst.ground_truth))

# %% [markdown]
# DATE starts from that vote.  The copy posteriors it can form from five
# shared tasks are weak, so the copied values keep their lead.

# %%
res = run_date(inst.public(), Params(similarity="edit", rho=0.5))
print(res.truth.values, precision(res.truth, inst.ground_truth), res.iterations)
print(np.round(res.posteriors.directed_matrix, 3))

# %% [markdown]
# Sweeping the copy probability shows how little room there is.

# %%
for r in (0.2, 0.4, 0.6, 0.8, 0.95):
    est = run_date(inst.public(), Params(similarity="edit", rho=0.5, copy_prob=r)).truth
    print(r, precision(est, inst.ground_truth))
