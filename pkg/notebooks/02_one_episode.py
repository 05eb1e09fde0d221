"""
One episode of the epoch-based learner
======================================

Derive the parameter schedule, play a horizon, and look at what the
trace records.
"""

import numpy as np

from xlearn import RngStreams, best_fixed_policy, derive_schedule, realized_regret, run_episode
from xlearn.baselines import run_baseline
from xlearn.env import EnvSpec, build_oracle

K, C, T = 3, 3, 2**14
schedule = derive_schedule(K, T, delta=0.1)
print(schedule)

oracle, nu = build_oracle(EnvSpec(kind="shifting", K=K, C=C, T=T, env_seed=11, segments=1))
trace = run_episode(oracle, nu, schedule, RngStreams(0))

# Rounds come in pairs; one round of each pair feeds the frequency estimate,
# the other may feed the loss estimate (if the keep coin says so).
print("loss rounds", trace.loss_rounds.size, "frequency rounds", trace.freq_rounds.size)
print("rejection fallbacks", int(trace.fallback.sum()))

for rec in trace.epochs[:4]:
    fh = None if rec.fhat is None else np.round(rec.fhat, 4)
    print(f"epoch {rec.e}: rounds [{rec.start}, {rec.stop}) f = {np.round(rec.f, 4)} fhat = {fh}")

pi = best_fixed_policy(oracle, trace.contexts)
print("comparator policy", pi, "regret %.1f" % realized_regret(trace, oracle, pi))

# The uniform player is the floor any learner should beat.
uni = run_baseline("uniform", oracle, nu, T, RngStreams(0))
print("uniform regret %.1f" % realized_regret(uni, oracle, best_fixed_policy(oracle, uni.contexts)))

# With this schedule the learning rate is tiny, so p moves slowly away
# from uniform over a desk-scale horizon.
print("final played distribution", np.round(trace.p_played[-1], 3))
