# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # The reverse auction on a generated crowd

# %%
import numpy as np

from imc2 import GenConfig, generate_instance, run_date, truthfulness_probe
from imc2 import auction as ra

inst = generate_instance(GenConfig(n=40, m=60, coverage=0.8, seed=3))
acc = run_date(inst.public()).accuracy
out = ra.run_reverse_auction(inst, acc)
print(len(out.winners), "winners, social cost", round(out.social_cost, 2),
      "paid", round(out.total_payment, 2))

# %% [markdown]
# Cheaper baselines: greedy by coverage and greedy by bid.

# %%
for name, fn in (("GA", ra.run_ga), ("GB", ra.run_gb)):
    print(name, round(ra.social_cost(inst, fn(inst, acc)), 2))

# %% [markdown]
# The guarantee constant is loose on instances like this one.

# %%
b = ra.bound_constants(inst, acc)
print(b)

# %% [markdown]
# Probe the first winner: its utility is flat while it keeps winning and
# drops to zero once the bid passes its critical payment.

# %%
w = out.winners[0]
probe = truthfulness_probe(inst, acc, w, np.linspace(0.5, 3.0, 11))
for bid, u, won in zip(probe.bids, probe.utilities, probe.won):
    print(f"{bid:7.2f} {u:7.2f} {'win' if won else '-'}")
