# %% [markdown]
# # Random linear coding moves the boundary
#
# With coding over F_q the seed's upload is useless to a one-club peer with
# probability 1/q, so its effective departure rate drops to Us (1 - 1/q).
# For q = 2 that is 0.5: lambda = 0.4 stays put, lambda = 0.75 grows.

# %%
import numpy as np

from p2pswarm import ModelParams, SimConfig
from p2pswarm.coding import CodedConfig, Subspace, effective_seed_rate, nc_simulate, one_club_subspace, useful_probability
from p2pswarm.simulator import slope_estimate, time_average

print("effective seed rate, q=2:", effective_seed_rate(1.0, 2))
print("P(seed useful to a one-club peer), q=2,4,256:",
      [useful_probability(one_club_subspace(q, 3), Subspace.full(q, 3)) for q in (2, 4, 256)])

# %%
for lam in (0.4, 0.75):
    slopes, avgs = [], []
    for seed in range(5):
        tr = nc_simulate(CodedConfig(SimConfig(ModelParams(3, lam, 1.0, 1.0), horizon=1000.0, rng_seed=seed), q=2))
        slopes.append(slope_estimate(tr, (200, 1000)))
        avgs.append(time_average(tr, (200, 1000)))
    print(f"lambda={lam}: mean |x| {np.mean(avgs):.1f}, slope {np.mean(slopes):+.3f} (lambda - 0.5 = {lam - 0.5:+.2f})")

# %%
# Larger fields push the boundary back toward Us
tr = nc_simulate(CodedConfig(SimConfig(ModelParams(3, 0.75, 1.0, 1.0), horizon=1000.0, rng_seed=0), q=256))
print(f"q=256, lambda=0.75: slope {slope_estimate(tr, (200, 1000)):+.3f}")
