"""
Loss environments
=================

Three oblivious adversaries, each a lazily materialized (T, C, K) loss tensor.
"""

import numpy as np

from xlearn.env import EnvSpec, build_oracle, competing_bids

# A shifting environment: every context has its own best arm, and the best
# arm is redrawn at each of `segments` equal slices of the horizon.
spec = EnvSpec(kind="shifting", K=4, C=3, T=8000, env_seed=1, segments=4)
oracle, nu = build_oracle(spec)
print("shape", oracle.shape, "context distribution", nu)
print("best arm per segment (rows) and context (cols):")
print(np.array(oracle.meta["best_arm_per_segment"]))

# Cross-learning means one column of the tensor is revealed at a time:
# playing arm 2 at round 10 shows its loss in every context.
print("round 10, arm 2, all contexts:", oracle.loss_row(10, 2))

# First-price auction: contexts are private values, arms are bids, and the
# competing bid switches between a low and a high regime.
spec = EnvSpec(kind="auction", T=4000, env_seed=2, values=[0.3, 0.6, 0.9], bids=[0.0, 0.2, 0.4, 0.6, 0.8])
oracle, nu = build_oracle(spec)
m, regime = competing_bids(spec)
print("\nauction: K =", oracle.K, "C =", oracle.C, "time in high regime %.2f" % regime.mean())
print("mean loss per (value, bid):")
print(np.round(oracle.tensor().mean(axis=0), 3))

# Sleeping arms: unavailable arms always lose 1, so a good policy must
# learn each context's availability set.
oracle, nu = build_oracle(EnvSpec(kind="sleeping", K=5, C=3, T=2000, env_seed=3))
print("\navailability sets:", oracle.meta["availability"])
