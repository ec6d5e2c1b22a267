# %% [markdown]
# # Why the boundary sits at Us
#
# Above Us, a launch from a large one club keeps young peers scarce and the
# swarm grows.  Below Us, a quadratic potential has negative drift far out.
# At infinite contact rate the whole swarm collapses to two numbers.

# %%
import numpy as np

from p2pswarm import ModelParams
from p2pswarm.analysis import (
    alt_system_simulate,
    comparison_moments,
    drift_region_check,
    hitting_time_bound,
    instability_constants,
    lyapunov_coefficients,
    mu_o_exact,
    top_layer_hitting_times,
)

# %%
# Constants for the launch argument, every defining inequality re-checked
p = ModelParams(3, 1.4, 1.0, 1.0)
c = instability_constants(p)
print(c.as_dict())
for name, ok in c.checks().items():
    print(f"  {name}: {ok}")
print(comparison_moments(c.xi, p.mu, p.Us, p.K))

# %%
# The modified-rate launch: young peers stay below a xi fraction and N climbs
res = [alt_system_simulate(p, c, 2000.0, np.random.default_rng(s)) for s in range(20)]
print("launch success:", sum(r.launch_success for r in res), "/ 20")
print("N growth per unit time:", np.mean([(r.N[-1] - r.N[0]) / 2000.0 for r in res]))

# %%
# Below capacity: coefficients, certificate, and sampled drift beyond L
coeffs = lyapunov_coefficients(0.9, 1.0, 3)
print("b =", coeffs.b, "exact checks:", coeffs.verify())
cert = drift_region_check(ModelParams(3, 0.9, 1.0, 1.0), coeffs, samples=200, rng=0)
print(cert.as_dict())

# %%
# Infinite contact rate: time to reach the top layer, and the critical contact rate
h = top_layer_hitting_times(1.0, 1.0, 5, 5000, np.random.default_rng(0))
print(f"mean hitting time {h.mean():.3f} vs bound {hitting_time_bound(1.0, 1.0, 5)}")
print("mu_o(1, K) for K = 2..6:", [str(mu_o_exact(1, K)) for K in range(2, 7)])
